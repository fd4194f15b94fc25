// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON documents printed by the command-line tool. Field names are stable.

#include <nlohmann/json.hpp>

#include "streamkv/accounting.hpp"
#include "streamkv/kv_store.hpp"
#include "streamkv/recall.hpp"

namespace streamkv {

nlohmann::json mem_report(const accounting::AccountingInput& in);
nlohmann::json usage_json(const UsageReport& usage);
// Per-layer selection summary, without the KV payload.
nlohmann::json recall_json(const RecallResult& result);

}  // namespace streamkv
