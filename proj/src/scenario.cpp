// Copyright 2026 The streamkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "streamkv/error.hpp"

namespace streamkv {

using nlohmann::json;
using agent::BBox;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw IngestionError("scenario: " + path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "required field missing");
    return *it;
}

template <class T>
T get_as(const json& v, const std::string& path) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        fail(path, std::string("wrong type (found ") + v.type_name() + ")");
    }
}

template <class T>
T field(const json& obj, const std::string& key, const std::string& path) {
    return get_as<T>(require(obj, key, path), path + "." + key);
}

template <class T>
std::optional<T> optional_field(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return get_as<T>(*it, path + "." + key);
}

std::size_t count_field(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(path + "." + key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

BBox parse_bbox(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 4) fail(path, "bbox must be [xmin, ymin, xmax, ymax]");
    BBox b{get_as<double>(v[0], path + "[0]"), get_as<double>(v[1], path + "[1]"), get_as<double>(v[2], path + "[2]"),
           get_as<double>(v[3], path + "[3]")};
    if (const std::string why = b.violation(); !why.empty()) fail(path, why);
    return b;
}

json bbox_json(const BBox& b) { return json::array({b.xmin, b.ymin, b.xmax, b.ymax}); }

const std::set<std::string>& gate_names() {
    static const std::set<std::string> names{"zoom_in", "object_traction", "detailed_caption"};
    return names;
}

std::vector<std::string> string_list(const json& obj, const std::string& key, const std::string& path, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) fail(path + "." + key, "required field missing");
        return {};
    }
    if (!it->is_array()) fail(path + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        out.push_back(get_as<std::string>((*it)[i], path + "." + key + "[" + std::to_string(i) + "]"));
    }
    return out;
}

WatchTarget parse_watch_target(const json& v, const std::string& path) {
    WatchTarget w;
    const auto kind = field<std::string>(v, "kind", path);
    if (kind == "region") {
        w.kind = WatchTarget::Kind::kRegion;
        w.bbox = parse_bbox(require(v, "bbox", path), path + ".bbox");
    } else if (kind == "caption") {
        w.kind = WatchTarget::Kind::kCaption;
        w.bbox = parse_bbox(require(v, "bbox", path), path + ".bbox");
    } else if (kind == "count") {
        w.kind = WatchTarget::Kind::kCount;
        const json& objs = require(v, "objects", path);
        if (!objs.is_object() || objs.empty()) fail(path + ".objects", "expected a non-empty object of named bboxes");
        for (auto it = objs.begin(); it != objs.end(); ++it) {
            w.objects.push_back({it.key(), parse_bbox(it.value(), path + ".objects." + it.key())});
        }
    } else {
        fail(path + ".kind", "unknown watch target kind '" + kind + "' (region, count, caption)");
    }
    return w;
}

json watch_target_json(const WatchTarget& w) {
    switch (w.kind) {
        case WatchTarget::Kind::kRegion:
            return {{"kind", "region"}, {"bbox", bbox_json(w.bbox)}};
        case WatchTarget::Kind::kCaption:
            return {{"kind", "caption"}, {"bbox", bbox_json(w.bbox)}};
        case WatchTarget::Kind::kCount: {
            json objs = json::object();
            for (const auto& o : w.objects) objs[o.name] = bbox_json(o.box);
            return {{"kind", "count"}, {"objects", objs}};
        }
    }
    return {};
}

CandidateFuture parse_future(const json& v, const std::string& path) {
    CandidateFuture f;
    try {
        f.mode = agent::parse_mode(field<std::string>(v, "mode", path));
    } catch (const UsageError& e) {
        fail(path + ".mode", e.what());
    }
    f.g = field<double>(v, "g", path);
    f.u = field<double>(v, "u", path);
    if (f.g < 0.0 || f.g > 5.0) fail(path + ".g", "score must lie in [0, 5]");
    if (f.u < 0.0 || f.u > 5.0) fail(path + ".u", "score must lie in [0, 5]");
    f.absent = optional_field<bool>(v, "absent", path).value_or(false);
    if (auto it = v.find("trajectory"); it != v.end()) {
        if (!it->is_array()) fail(path + ".trajectory", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string p = path + ".trajectory[" + std::to_string(i) + "]";
            f.trajectory.push_back({field<std::int64_t>((*it)[i], "t", p), field<std::string>((*it)[i], "text", p)});
        }
    }
    if (auto it = v.find("watch_targets"); it != v.end()) {
        if (!it->is_array()) fail(path + ".watch_targets", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            f.watch_targets.push_back(parse_watch_target((*it)[i], path + ".watch_targets[" + std::to_string(i) + "]"));
        }
    }
    return f;
}

ExpectedOutcome parse_expected(const json& v, const std::string& path) {
    return {field<std::string>(v, "answer", path), field<std::int64_t>(v, "t", path)};
}

}  // namespace

void validate_scenario(const Scenario& s) {
    if (s.schema != kScenarioSchema) fail("schema", "unsupported schema version " + std::to_string(s.schema));
    if (s.name.empty()) fail("name", "must not be empty");
    if (s.clips.empty()) fail("clips", "at least one clip is required");
    std::set<std::string> kinds;
    for (std::size_t i = 0; i < s.clips.size(); ++i) {
        const ScenarioClip& c = s.clips[i];
        const std::string p = "clips[" + std::to_string(i) + "]";
        if (i > 0 && c.clip_id <= s.clips[i - 1].clip_id) fail(p + ".clip_id", "clip ids must be strictly increasing");
        const auto t = static_cast<std::int64_t>(i + 1);
        for (std::size_t j = 0; j < c.events.size(); ++j) {
            const ScenarioEvent& e = c.events[j];
            const std::string ep = p + ".events[" + std::to_string(j) + "]";
            if (e.t != t) fail(ep + ".t", "event timestamp " + std::to_string(e.t) + " lies outside its clip (t=" + std::to_string(t) + ")");
            if (e.frame >= c.n_frames) fail(ep + ".frame", "frame index outside the clip's " + std::to_string(c.n_frames) + " frames");
            if (e.kind.empty()) fail(ep + ".kind", "must not be empty");
            if (e.gated_by_tool) {
                if (!gate_names().count(*e.gated_by_tool)) fail(ep + ".gated_by_tool", "unknown tool '" + *e.gated_by_tool + "'");
                if (*e.gated_by_tool != "object_traction" && !e.region) fail(ep + ".region", "region-gated events need a region");
            }
            kinds.insert(e.kind);
        }
    }
    const ScenarioQuestion& q = s.question;
    if (q.text.empty()) fail("question.text", "must not be empty");
    if (q.asked_at < 1 || q.asked_at > s.horizon()) fail("question.asked_at", "must lie within [1, clip count]");
    for (std::size_t i = 0; i < q.required_evidence_events.size(); ++i) {
        if (!kinds.count(q.required_evidence_events[i])) {
            fail("question.required_evidence_events[" + std::to_string(i) + "]",
                 "'" + q.required_evidence_events[i] + "' is not a declared event kind");
        }
    }
    if (q.answer.kinds.empty()) fail("question.answer.kinds", "at least one event kind is required");
    if (q.futures.empty()) fail("question.futures", "at least one candidate future is required");
    for (const auto* e : {&s.expect_planned, &s.expect_baseline}) {
        if (*e && ((*e)->t < 1 || (*e)->t > s.horizon())) fail("expect", "expected response time outside the stream");
    }
}

std::string Scenario::focus_kind() const {
    if (!question.focus_kind.empty()) return question.focus_kind;
    return question.answer.kinds.empty() ? std::string() : question.answer.kinds.front();
}

ModelPreset model_preset(const std::string& name) {
    ModelPreset p;
    if (name == "desk") {
        p.model = ModelConfig{2, 32, 4, 2, 8, 4, 7};
        p.chunk_size = 16;
    } else if (name == "small") {
        p.model = ModelConfig{4, 64, 8, 2, 8, 8, 7};
        p.chunk_size = 64;
    } else if (name == "paper") {
        p.model = ModelConfig{28, 3584, 28, 4, 128, 32, 7};
        p.chunk_size = 4096;
    } else {
        throw UsageError("unknown model preset '" + name + "' (desk, small, paper)");
    }
    return p;
}

StreamSettings resolve_settings(const Scenario& scenario) {
    const ConfigOverrides& o = scenario.config;
    const ModelPreset preset = model_preset(o.preset.value_or("desk"));
    StreamSettings s;
    s.model = preset.model;
    s.chunk_size = o.chunk_size.value_or(preset.chunk_size);
    if (o.n_layers) s.model.n_layers = *o.n_layers;
    if (o.d_model) s.model.d_model = *o.d_model;
    if (o.n_heads) s.model.n_heads = *o.n_heads;
    if (o.n_kv_heads) s.model.n_kv_heads = *o.n_kv_heads;
    if (o.d_head) s.model.d_head = *o.d_head;
    if (o.tokens_per_frame) s.model.tokens_per_frame = *o.tokens_per_frame;
    if (o.seed) s.model.seed = *o.seed;
    if (o.event_strength) s.event_strength = *o.event_strength;
    if (o.noise_scale) s.noise_scale = *o.noise_scale;
    s.model.validate();
    if (s.chunk_size == 0) throw ConfigError("chunk size must be >= 1");
    return s;
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) fail("$", "expected a JSON object");
    Scenario s;
    s.schema = field<int>(j, "schema", "$");
    s.name = field<std::string>(j, "name", "$");
    s.description = optional_field<std::string>(j, "description", "$").value_or("");
    if (auto it = j.find("config"); it != j.end()) {
        const std::string p = "config";
        if (!it->is_object()) fail(p, "expected an object");
        ConfigOverrides& o = s.config;
        o.preset = optional_field<std::string>(*it, "preset", p);
        o.n_layers = optional_field<std::size_t>(*it, "n_layers", p);
        o.d_model = optional_field<std::size_t>(*it, "d_model", p);
        o.n_heads = optional_field<std::size_t>(*it, "n_heads", p);
        o.n_kv_heads = optional_field<std::size_t>(*it, "n_kv_heads", p);
        o.d_head = optional_field<std::size_t>(*it, "d_head", p);
        o.tokens_per_frame = optional_field<std::size_t>(*it, "tokens_per_frame", p);
        o.seed = optional_field<std::uint64_t>(*it, "seed", p);
        o.chunk_size = optional_field<std::size_t>(*it, "chunk_size", p);
        o.event_strength = optional_field<double>(*it, "event_strength", p);
        o.noise_scale = optional_field<double>(*it, "noise_scale", p);
    }
    const json& clips = require(j, "clips", "$");
    if (!clips.is_array()) fail("clips", "expected an array");
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const std::string p = "clips[" + std::to_string(i) + "]";
        const json& c = clips[i];
        ScenarioClip clip;
        clip.clip_id = field<std::uint64_t>(c, "clip_id", p);
        clip.n_frames = count_field(c, "n_frames", p);
        clip.token_seed = field<std::uint64_t>(c, "token_seed", p);
        if (auto it = c.find("events"); it != c.end()) {
            if (!it->is_array()) fail(p + ".events", "expected an array");
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string ep = p + ".events[" + std::to_string(k) + "]";
                const json& e = (*it)[k];
                ScenarioEvent ev;
                ev.t = field<std::int64_t>(e, "t", ep);
                ev.frame = optional_field<std::size_t>(e, "frame", ep).value_or(0);
                ev.kind = field<std::string>(e, "kind", ep);
                ev.payload = optional_field<std::string>(e, "payload", ep).value_or("");
                ev.value = optional_field<std::string>(e, "value", ep).value_or("");
                if (auto r = e.find("region"); r != e.end() && !r->is_null()) ev.region = parse_bbox(*r, ep + ".region");
                ev.gated_by_tool = optional_field<std::string>(e, "gated_by_tool", ep);
                clip.events.push_back(std::move(ev));
            }
        }
        s.clips.push_back(std::move(clip));
    }
    const json& q = require(j, "question", "$");
    const std::string qp = "question";
    s.question.text = field<std::string>(q, "text", qp);
    s.question.asked_at = field<std::int64_t>(q, "asked_at", qp);
    s.question.required_evidence_events = string_list(q, "required_evidence_events", qp, true);
    s.question.ground_truth = field<std::string>(q, "ground_truth", qp);
    s.question.focus_kind = optional_field<std::string>(q, "focus_kind", qp).value_or("");
    const json& ans = require(q, "answer", qp);
    const auto rule = field<std::string>(ans, "rule", qp + ".answer");
    if (rule == "count") {
        s.question.answer.kind = AnswerRule::Kind::kCount;
    } else if (rule == "latest") {
        s.question.answer.kind = AnswerRule::Kind::kLatest;
    } else {
        fail(qp + ".answer.rule", "unknown answer rule '" + rule + "' (count, latest)");
    }
    s.question.answer.kinds = string_list(ans, "kinds", qp + ".answer", true);
    const json& futures = require(q, "futures", qp);
    if (!futures.is_array()) fail(qp + ".futures", "expected an array");
    for (std::size_t i = 0; i < futures.size(); ++i) {
        s.question.futures.push_back(parse_future(futures[i], qp + ".futures[" + std::to_string(i) + "]"));
    }
    if (auto it = j.find("expect"); it != j.end()) {
        if (auto p = it->find("planned"); p != it->end()) s.expect_planned = parse_expected(*p, "expect.planned");
        if (auto b = it->find("baseline"); b != it->end()) s.expect_baseline = parse_expected(*b, "expect.baseline");
    }
    validate_scenario(s);
    return s;
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t at = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at ? at - 1 : 0), '\n');
        throw IngestionError("scenario: JSON syntax error at line " + std::to_string(line) + ": " + e.what());
    }
    return scenario_from_json(j);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IngestionError("scenario: cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const IngestionError& e) {
        throw IngestionError(path.filename().string() + ": " + e.what());
    }
}

json to_json(const Scenario& s) {
    json j;
    j["schema"] = s.schema;
    j["name"] = s.name;
    if (!s.description.empty()) j["description"] = s.description;
    json cfg = json::object();
    const ConfigOverrides& o = s.config;
    if (o.preset) cfg["preset"] = *o.preset;
    if (o.n_layers) cfg["n_layers"] = *o.n_layers;
    if (o.d_model) cfg["d_model"] = *o.d_model;
    if (o.n_heads) cfg["n_heads"] = *o.n_heads;
    if (o.n_kv_heads) cfg["n_kv_heads"] = *o.n_kv_heads;
    if (o.d_head) cfg["d_head"] = *o.d_head;
    if (o.tokens_per_frame) cfg["tokens_per_frame"] = *o.tokens_per_frame;
    if (o.seed) cfg["seed"] = *o.seed;
    if (o.chunk_size) cfg["chunk_size"] = *o.chunk_size;
    if (o.event_strength) cfg["event_strength"] = *o.event_strength;
    if (o.noise_scale) cfg["noise_scale"] = *o.noise_scale;
    if (!cfg.empty()) j["config"] = cfg;
    json clips = json::array();
    for (const ScenarioClip& c : s.clips) {
        json cj{{"clip_id", c.clip_id}, {"n_frames", c.n_frames}, {"token_seed", c.token_seed}};
        json events = json::array();
        for (const ScenarioEvent& e : c.events) {
            json ej{{"t", e.t}, {"frame", e.frame}, {"kind", e.kind}};
            if (!e.payload.empty()) ej["payload"] = e.payload;
            if (!e.value.empty()) ej["value"] = e.value;
            if (e.region) ej["region"] = bbox_json(*e.region);
            if (e.gated_by_tool) ej["gated_by_tool"] = *e.gated_by_tool;
            events.push_back(std::move(ej));
        }
        cj["events"] = std::move(events);
        clips.push_back(std::move(cj));
    }
    j["clips"] = std::move(clips);
    const ScenarioQuestion& q = s.question;
    json qj{{"text", q.text},
            {"asked_at", q.asked_at},
            {"required_evidence_events", q.required_evidence_events},
            {"ground_truth", q.ground_truth},
            {"answer",
             {{"rule", q.answer.kind == AnswerRule::Kind::kCount ? "count" : "latest"}, {"kinds", q.answer.kinds}}}};
    if (!q.focus_kind.empty()) qj["focus_kind"] = q.focus_kind;
    json futures = json::array();
    for (const CandidateFuture& f : q.futures) {
        json fj{{"mode", agent::to_string(f.mode)}, {"g", f.g}, {"u", f.u}};
        if (f.absent) fj["absent"] = true;
        json traj = json::array();
        for (const TrajectoryItem& item : f.trajectory) traj.push_back({{"t", item.t}, {"text", item.text}});
        fj["trajectory"] = std::move(traj);
        json targets = json::array();
        for (const WatchTarget& w : f.watch_targets) targets.push_back(watch_target_json(w));
        fj["watch_targets"] = std::move(targets);
        futures.push_back(std::move(fj));
    }
    qj["futures"] = std::move(futures);
    j["question"] = std::move(qj);
    if (s.expect_planned || s.expect_baseline) {
        json ex = json::object();
        if (s.expect_planned) ex["planned"] = {{"answer", s.expect_planned->answer}, {"t", s.expect_planned->t}};
        if (s.expect_baseline) ex["baseline"] = {{"answer", s.expect_baseline->answer}, {"t", s.expect_baseline->t}};
        j["expect"] = std::move(ex);
    }
    return j;
}

}  // namespace streamkv
