#include "adgen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <regex>
#include <semaphore>

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::A1: return "A1";
        case Ablation::A2: return "A2";
        case Ablation::A3: return "A3";
        case Ablation::A4: return "A4";
    }
    return "?";
}

Ablation parse_ablation(std::string_view text) {
    const std::string t = text::trim(text);
    for (auto a : {Ablation::A1, Ablation::A2, Ablation::A3, Ablation::A4}) {
        if (t == to_string(a) || t == text::lower(to_string(a))) return a;
    }
    throw InvalidSpec("unknown ablation '" + t + "' (expected A1, A2, A3 or A4)");
}

std::string to_string(BatchState s) {
    switch (s) {
        case BatchState::queued: return "queued";
        case BatchState::running: return "running";
        case BatchState::completed: return "completed";
    }
    return "?";
}

namespace {

BatchState parse_batch_state(const std::string& s) {
    for (auto b : {BatchState::queued, BatchState::running, BatchState::completed}) {
        if (to_string(b) == s) return b;
    }
    throw InvalidSpec("unknown batch state '" + s + "'");
}

constexpr Stage kStages[] = {Stage::pairing, Stage::profiling, Stage::scene,
                             Stage::layout,  Stage::compose,   Stage::background};

}  // namespace

std::string to_string(Stage s) {
    switch (s) {
        case Stage::pairing: return "pairing";
        case Stage::profiling: return "profiling";
        case Stage::scene: return "scene";
        case Stage::layout: return "layout";
        case Stage::compose: return "compose";
        case Stage::background: return "background";
    }
    return "?";
}

Stage parse_stage(std::string_view text) {
    for (auto s : kStages) {
        if (to_string(s) == text) return s;
    }
    throw InvalidArgument("unknown stage '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// BatchSpec
// ---------------------------------------------------------------------------

void BatchSpec::validate() const {
    if (count < 1) throw InvalidSpec("count must be >= 1 (got " + std::to_string(count) + ")");
    if (count > 10000) throw InvalidSpec("count must be <= 10000");
    if (text::trim(style).empty()) throw InvalidSpec("style must not be empty");
    if (!has(Ablation::A1) && (text::trim(category_a).empty() || text::trim(category_b).empty())) {
        throw InvalidSpec("category_a and category_b are required");
    }
    if (!(threshold_deg >= 0.0 && threshold_deg <= 180.0)) throw InvalidSpec("threshold_deg must lie in [0, 180]");
    if (!(control_strength >= 0.0 && control_strength <= 1.0)) throw InvalidSpec("control_strength must lie in [0, 1]");
}

json batch_spec_to_json(const BatchSpec& s) {
    json abl = json::array();
    for (auto a : s.ablations) abl.push_back(to_string(a));
    return {{"room_type", to_string(s.room_type)},
            {"style", s.style},
            {"category_a", s.category_a},
            {"category_b", s.category_b},
            {"count", s.count},
            {"seed", s.seed},
            {"ablations", abl},
            {"threshold_deg", s.threshold_deg},
            {"control_strength", s.control_strength},
            {"remove_white_bg", s.remove_white_bg}};
}

namespace {

std::uint64_t read_u64(const json& v, const char* what) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto i = v.get<std::int64_t>();
        if (i < 0) throw InvalidSpec(std::string(what) + " must be non-negative");
        return static_cast<std::uint64_t>(i);
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw InvalidSpec(std::string(what) + " must be an unsigned integer");
        }
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw InvalidSpec(std::string(what) + " is out of range");
        }
    }
    throw InvalidSpec(std::string(what) + " must be an unsigned integer");
}

template <class T>
T field(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw InvalidSpec(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

BatchSpec batch_spec_from_json(const json& j) {
    if (!j.is_object()) throw InvalidSpec("batch spec must be a JSON object");
    static const std::set<std::string> kKeys = {"room_type",   "style", "category_a", "category_b",
                                                "count",       "seed",  "ablations",  "threshold_deg",
                                                "control_strength", "remove_white_bg"};
    for (const auto& [k, v] : j.items()) {
        if (!kKeys.count(k)) throw InvalidSpec("unknown batch spec field '" + k + "'");
    }
    BatchSpec s;
    try {
        s.room_type = parse_room_type(field<std::string>(j, "room_type", "living_room"));
    } catch (const InvalidArgument& e) {
        throw InvalidSpec(e.what());
    }
    s.style = field<std::string>(j, "style", s.style);
    s.category_a = field<std::string>(j, "category_a", "");
    s.category_b = field<std::string>(j, "category_b", "");
    if (!j.contains("count")) throw InvalidSpec("field 'count' is required");
    if (!j["count"].is_number_integer()) throw InvalidSpec("count must be an integer");
    const auto count = j["count"].get<std::int64_t>();
    s.count = static_cast<int>(std::clamp<std::int64_t>(count, -1, 1'000'000));
    if (j.contains("seed")) s.seed = read_u64(j["seed"], "seed");
    if (j.contains("ablations")) {
        if (!j["ablations"].is_array()) throw InvalidSpec("ablations must be an array");
        for (const auto& a : j["ablations"]) {
            if (!a.is_string()) throw InvalidSpec("ablations must be strings");
            s.ablations.insert(parse_ablation(a.get<std::string>()));
        }
    }
    s.threshold_deg = field<double>(j, "threshold_deg", s.threshold_deg);
    s.control_strength = field<double>(j, "control_strength", s.control_strength);
    s.remove_white_bg = field<bool>(j, "remove_white_bg", s.remove_white_bg);
    s.validate();
    return s;
}

std::string batch_id_for(const BatchSpec& s) {
    BatchSpec canon = s;
    canon.category_a = normalize_category(canon.category_a);
    canon.category_b = normalize_category(canon.category_b);
    canon.style = text::trim(canon.style);
    return "b" + sha256_hex(batch_spec_to_json(canon).dump()).substr(0, 23);
}

json batch_info_to_json(const BatchInfo& b) {
    return {{"id", b.id},
            {"spec", batch_spec_to_json(b.spec)},
            {"state", to_string(b.state)},
            {"generation_ids", b.generation_ids},
            {"ok_count", b.ok_count},
            {"failed_count", b.failed_count},
            {"created_at", b.created_at},
            {"updated_at", b.updated_at}};
}

BatchInfo batch_info_from_json(const json& j) {
    BatchInfo b;
    b.id = j.at("id").get<std::string>();
    b.spec = batch_spec_from_json(j.at("spec"));
    b.state = parse_batch_state(j.at("state").get<std::string>());
    b.generation_ids = j.at("generation_ids").get<std::vector<std::string>>();
    b.ok_count = j.value("ok_count", std::size_t{0});
    b.failed_count = j.value("failed_count", std::size_t{0});
    b.created_at = j.value("created_at", "");
    b.updated_at = j.value("updated_at", "");
    return b;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

std::vector<std::string> GenerationRecord::artifact_hashes() const {
    return {artifacts.canvas, artifacts.alpha, artifacts.mask, artifacts.ad, artifacts.raw_ad};
}

json layout_to_json(const LayoutSpec& spec) {
    json boxes = json::array();
    for (const auto& b : spec.boxes) {
        boxes.push_back({{"label", b.label},
                         {"width", b.width_px},
                         {"height", b.height_px},
                         {"left", b.left_px},
                         {"top", b.top_px},
                         {"layer", b.layer}});
    }
    return {{"boxes", boxes},
            {"css", serialize_layout(spec)},
            {"item_ids", spec.item_ids},
            {"canvas_px", spec.canvas_px},
            {"floor_line_px", spec.floor_line_px}};
}

LayoutSpec layout_from_json(const json& j) {
    if (j.is_string()) return parse_layout(j.get<std::string>());
    if (!j.is_object() || !j.contains("boxes") || !j["boxes"].is_array() || j["boxes"].size() != 2) {
        throw InvalidArgument("layout_spec needs exactly two boxes");
    }
    LayoutSpec spec;
    for (std::size_t i = 0; i < 2; ++i) {
        const json& b = j["boxes"][i];
        auto num = [&](const char* key) {
            const auto it = b.find(key);
            if (it == b.end() || !it->is_number_integer()) {
                throw InvalidArgument(std::string("layout box ") + std::to_string(i + 1) + " needs integer '" + key + "'");
            }
            return it->get<int>();
        };
        spec.boxes[i] = {b.value("label", std::string()), num("width"), num("height"), num("left"), num("top"),
                         num("layer")};
    }
    if (j.contains("item_ids")) spec.item_ids = j["item_ids"].get<std::array<std::string, 2>>();
    return spec;
}

namespace {

json dims_json(const std::optional<Dimensions>& d) {
    if (!d) return nullptr;
    return json::array({d->length, d->width, d->height});
}

std::optional<Dimensions> dims_from(const json& j) {
    if (!j.is_array() || j.size() != 3) return std::nullopt;
    return Dimensions{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json generation_to_json(const GenerationRecord& r) {
    json abl = json::array();
    for (auto a : r.ablations) abl.push_back(to_string(a));
    json j = {{"id", r.id},
              {"batch_id", r.batch_id},
              {"index", r.index},
              {"parent_id", r.parent_id},
              {"room_type", to_string(r.room_type)},
              {"style", r.style},
              {"category_a", r.category_a},
              {"category_b", r.category_b},
              {"ablations", abl},
              {"pair", r.pair ? pair_to_json(*r.pair) : json(nullptr)},
              {"dims_a", dims_json(r.dims_a)},
              {"dims_b", dims_json(r.dims_b)},
              {"brief", r.brief ? brief_to_json(*r.brief) : json(nullptr)},
              {"layout", r.layout ? layout_to_json(*r.layout) : json(nullptr)},
              {"validation", report_to_json(r.validation)},
              {"layout_clamped", r.layout_clamped},
              {"layout_attempts", r.layout_attempts},
              {"prompts",
               {{"layout_user", r.prompts.layout_user},
                {"layout_raw", r.prompts.layout_raw},
                {"background_edit", r.prompts.background_edit ? json(*r.prompts.background_edit) : json(nullptr)},
                {"background", r.prompts.background},
                {"negative", r.prompts.negative}}},
              {"seeds", {{"generation", r.generation_seed}, {"background", r.background_seed}}},
              {"control_strength", r.control_strength},
              {"remove_white_bg", r.remove_white_bg},
              {"protect_margin_px", r.protect_margin_px},
              {"steps", r.steps},
              {"artifacts",
               {{"canvas", r.artifacts.canvas},
                {"alpha", r.artifacts.alpha},
                {"mask", r.artifacts.mask},
                {"ad", r.artifacts.ad},
                {"raw_ad", r.artifacts.raw_ad}}},
              {"preservation", preservation_to_json(r.preservation)},
              {"audit", preservation_to_json(r.audit)},
              {"status", r.status.ok ? json{{"state", "ok"}}
                                     : json{{"state", "failed"}, {"stage", r.status.stage}, {"reason", r.status.reason}}},
              {"diagnostics", r.diagnostics},
              {"overrides", r.overrides},
              {"created_at", r.created_at}};
    return j;
}

GenerationRecord generation_from_json(const json& j) {
    GenerationRecord r;
    r.id = j.at("id").get<std::string>();
    r.batch_id = j.value("batch_id", "");
    r.index = j.value("index", 0);
    r.parent_id = j.value("parent_id", "");
    r.room_type = parse_room_type(j.at("room_type").get<std::string>());
    r.style = j.value("style", "");
    r.category_a = j.value("category_a", "");
    r.category_b = j.value("category_b", "");
    for (const auto& a : j.value("ablations", json::array())) r.ablations.insert(parse_ablation(a.get<std::string>()));
    if (j.contains("pair") && !j["pair"].is_null()) r.pair = pair_from_json(j["pair"]);
    r.dims_a = dims_from(j.value("dims_a", json(nullptr)));
    r.dims_b = dims_from(j.value("dims_b", json(nullptr)));
    if (j.contains("brief") && !j["brief"].is_null()) r.brief = brief_from_json(j["brief"]);
    if (j.contains("layout") && !j["layout"].is_null()) {
        LayoutSpec spec = parse_layout(j["layout"].at("css").get<std::string>());
        spec.item_ids = j["layout"].value("item_ids", std::array<std::string, 2>{});
        r.layout = spec;
    }
    if (j.contains("validation")) r.validation = report_from_json(j["validation"]);
    r.layout_clamped = j.value("layout_clamped", false);
    r.layout_attempts = j.value("layout_attempts", 0);
    if (j.contains("prompts")) {
        const json& p = j["prompts"];
        r.prompts.layout_user = p.value("layout_user", std::vector<std::string>{});
        r.prompts.layout_raw = p.value("layout_raw", "");
        if (p.contains("background_edit") && p["background_edit"].is_string()) {
            r.prompts.background_edit = p["background_edit"].get<std::string>();
        }
        r.prompts.background = p.value("background", "");
        r.prompts.negative = p.value("negative", "");
    }
    if (j.contains("seeds")) {
        r.generation_seed = j["seeds"].value("generation", std::uint64_t{0});
        r.background_seed = j["seeds"].value("background", std::uint64_t{0});
    }
    r.control_strength = j.value("control_strength", kDefaultControlStrength);
    r.remove_white_bg = j.value("remove_white_bg", true);
    r.protect_margin_px = j.value("protect_margin_px", kDefaultProtectMarginPx);
    r.steps = j.value("steps", kDefaultInpaintSteps);
    if (j.contains("artifacts")) {
        const json& a = j["artifacts"];
        r.artifacts = {a.value("canvas", ""), a.value("alpha", ""), a.value("mask", ""), a.value("ad", ""),
                       a.value("raw_ad", "")};
    }
    if (j.contains("preservation")) r.preservation = preservation_from_json(j["preservation"]);
    if (j.contains("audit")) r.audit = preservation_from_json(j["audit"]);
    const json status = j.value("status", json{{"state", "ok"}});
    r.status.ok = status.value("state", "ok") == "ok";
    r.status.stage = status.value("stage", "");
    r.status.reason = status.value("reason", "");
    r.diagnostics = j.value("diagnostics", std::vector<std::string>{});
    r.overrides = j.value("overrides", json::object());
    r.created_at = j.value("created_at", "");
    return r;
}

// ---------------------------------------------------------------------------
// Overrides
// ---------------------------------------------------------------------------

void RegenerateOverrides::validate() const {
    if (control_strength && !(*control_strength >= 0.0 && *control_strength <= 1.0)) {
        throw InvalidArgument("control_strength must lie in [0, 1]");
    }
    if (layout_prompt && text::trim(*layout_prompt).empty()) throw InvalidArgument("layout_prompt must not be empty");
    if (background_prompt && text::trim(*background_prompt).empty()) {
        throw InvalidArgument("background_prompt must not be empty");
    }
}

RegenerateOverrides overrides_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("overrides must be a JSON object");
    static const std::set<std::string> kKeys = {"layout_spec",      "layout_prompt",   "background_prompt",
                                                "control_strength", "remove_white_bg", "seed"};
    for (const auto& [k, v] : j.items()) {
        if (!kKeys.count(k)) throw InvalidArgument("unknown override '" + k + "'");
    }
    RegenerateOverrides o;
    try {
        if (j.contains("layout_spec") && !j["layout_spec"].is_null()) o.layout_spec = layout_from_json(j["layout_spec"]);
        if (j.contains("layout_prompt") && !j["layout_prompt"].is_null()) o.layout_prompt = j["layout_prompt"].get<std::string>();
        if (j.contains("background_prompt") && !j["background_prompt"].is_null()) {
            o.background_prompt = j["background_prompt"].get<std::string>();
        }
        if (j.contains("control_strength") && !j["control_strength"].is_null()) {
            o.control_strength = j["control_strength"].get<double>();
        }
        if (j.contains("remove_white_bg") && !j["remove_white_bg"].is_null()) {
            o.remove_white_bg = j["remove_white_bg"].get<bool>();
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed override: ") + e.what());
    } catch (const LayoutParseError& e) {
        throw InvalidArgument(std::string("layout_spec: ") + e.what());
    }
    if (j.contains("seed") && !j["seed"].is_null()) {
        try {
            o.seed = read_u64(j["seed"], "seed");
        } catch (const InvalidSpec& e) {
            throw InvalidArgument(e.what());
        }
    }
    o.validate();
    return o;
}

json overrides_to_json(const RegenerateOverrides& o) {
    json j = json::object();
    if (o.layout_spec) j["layout_spec"] = serialize_layout(*o.layout_spec);
    if (o.layout_prompt) j["layout_prompt"] = *o.layout_prompt;
    if (o.background_prompt) j["background_prompt"] = *o.background_prompt;
    if (o.control_strength) j["control_strength"] = *o.control_strength;
    if (o.remove_white_bg) j["remove_white_bg"] = *o.remove_white_bg;
    if (o.seed) j["seed"] = *o.seed;
    return j;
}

json collection_to_json(const Collection& c) {
    return {{"name", c.name}, {"entries", c.entries}, {"created_at", c.created_at}, {"updated_at", c.updated_at}};
}

Collection collection_from_json(const json& j) {
    return {j.at("name").get<std::string>(), j.at("entries").get<std::vector<std::string>>(),
            j.value("created_at", ""), j.value("updated_at", "")};
}

json orchestrator_config_to_json(const OrchestratorConfig& c) {
    return {{"workers", c.workers},
            {"inpaint_inflight", c.inpaint_inflight},
            {"stage_timeout_s", c.stage_timeout_s},
            {"protect_margin_px", c.protect_margin_px},
            {"negative_prompt", c.negative_prompt},
            {"styles", c.styles},
            {"aspect_tolerance", c.layout_policy.aspect_tolerance},
            {"relative_scale_tolerance", c.layout_policy.relative_scale_tolerance},
            {"max_layout_retries", c.layout_policy.max_retries},
            {"ransac_iterations", c.tilt.ransac.iterations},
            {"inlier_dist_m", c.tilt.ransac.inlier_dist_m}};
}

OrchestratorConfig orchestrator_config_from_json(const json& j) {
    OrchestratorConfig c;
    c.workers = std::max(1, j.value("workers", c.workers));
    c.inpaint_inflight = std::max(1, j.value("inpaint_inflight", c.inpaint_inflight));
    c.stage_timeout_s = j.value("stage_timeout_s", c.stage_timeout_s);
    c.protect_margin_px = j.value("protect_margin_px", c.protect_margin_px);
    c.negative_prompt = j.value("negative_prompt", c.negative_prompt);
    c.styles = j.value("styles", c.styles);
    c.layout_policy.aspect_tolerance = j.value("aspect_tolerance", c.layout_policy.aspect_tolerance);
    c.layout_policy.relative_scale_tolerance =
        j.value("relative_scale_tolerance", c.layout_policy.relative_scale_tolerance);
    c.layout_policy.max_retries = j.value("max_layout_retries", c.layout_policy.max_retries);
    c.tilt.ransac.iterations = j.value("ransac_iterations", c.tilt.ransac.iterations);
    c.tilt.ransac.inlier_dist_m = j.value("inlier_dist_m", c.tilt.ransac.inlier_dist_m);
    return c;
}

// ---------------------------------------------------------------------------
// Orchestrator
// ---------------------------------------------------------------------------

struct Orchestrator::Work {
    explicit Work(int inflight) : inpaint_slots(inflight) {}
    std::counting_semaphore<1024> inpaint_slots;
};

namespace {

std::string error_reason(const std::exception& e) {
    if (const auto* ae = dynamic_cast<const Error*>(&e)) return ae->kind() + ": " + ae->what();
    return std::string("InternalError: ") + e.what();
}

std::string hash_png(const std::vector<std::uint8_t>& png) { return sha256_hex(png); }

constexpr std::uint64_t kPairStream = 0x5041495253ULL;
constexpr std::uint64_t kRandomPairStream = 0xA1ULL;
constexpr std::uint64_t kBackgroundStream = 0xB6ULL;

bool valid_collection_name(const std::string& name) {
    static const std::regex kName(R"(^[A-Za-z0-9_.-]{1,64}$)");
    return std::regex_match(name, kName) && name != "." && name != "..";
}

}  // namespace

Orchestrator::Orchestrator(Catalog catalog, ModelGateway gateway, std::shared_ptr<Store> store,
                           OrchestratorConfig config)
    : catalog_(std::move(catalog)),
      gateway_(std::move(gateway)),
      store_(std::move(store)),
      config_(std::move(config)),
      tilts_(catalog_, gateway_, config_.tilt),
      work_(std::make_unique<Work>(std::max(1, config_.inpaint_inflight))) {
    if (!gateway_.chat || !gateway_.depth || !gateway_.segmenter || !gateway_.inpainter) {
        throw InvalidArgument("orchestrator needs all four model capabilities");
    }
    tilts_.load(store_->tilts_path());
    for (auto& [id, p] : load_profiles(store_->profiles_path())) profiles_[id] = {p, {}};
    std::ifstream failures(store_->root() / "profile_failures.json");
    if (failures) {
        const json j = json::parse(failures, nullptr, false);
        if (j.is_object()) {
            for (const auto& [id, why] : j.items()) profiles_[id] = {std::nullopt, why.get<std::string>()};
        }
    }
    // A run interrupted by a restart starts over.
    for (const auto& b : store_->batches()) {
        if (b.value("state", "") == "running") {
            BatchInfo info = batch_info_from_json(b);
            info.state = BatchState::queued;
            store_->save_batch(batch_info_to_json(info));
        }
    }
}

Orchestrator::~Orchestrator() { wait_idle(); }

void Orchestrator::wait_idle() {
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(batch_mutex_);
        threads.swap(background_);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
}

ProfileLookup Orchestrator::profile(const std::string& item_id) {
    {
        std::lock_guard lock(profile_mutex_);
        if (const auto it = profiles_.find(item_id); it != profiles_.end()) return it->second;
    }
    const ProductRecord* record = catalog_.find(item_id);
    if (!record) throw InvalidArgument("unknown product " + item_id);
    const auto categories = catalog_.categories_of(item_id);
    ProfileLookup out;
    try {
        if (categories.empty()) throw ProfileRejected("product " + item_id + " has no category");
        out.profile = profile_product(*gateway_.chat, *record, catalog_.main_image(item_id), categories.front(),
                                      gateway_.chat_model);
    } catch (const ProfileRejected& e) {
        out.failure = error_reason(e);
    } catch (const UnparseableModelOutput& e) {
        out.failure = error_reason(e);
    } catch (const IoError& e) {
        out.failure = error_reason(e);
    } catch (const ImageDecodeError& e) {
        out.failure = error_reason(e);
    }
    std::lock_guard lock(profile_mutex_);
    return profiles_.emplace(item_id, out).first->second;
}

std::map<std::string, ProductProfile> Orchestrator::profiles_for(const std::optional<std::string>& category) {
    std::vector<std::string> ids;
    if (category) {
        const auto it = catalog_.category_index.find(normalize_category(*category));
        if (it != catalog_.category_index.end()) ids = it->second;
    } else {
        for (const auto& [id, r] : catalog_.records) ids.push_back(id);
    }
    std::map<std::string, ProductProfile> out;
    bool computed = false;
    for (const auto& id : ids) {
        {
            std::lock_guard lock(profile_mutex_);
            computed |= !profiles_.count(id);
        }
        const ProfileLookup p = profile(id);
        if (p.profile) out.emplace(id, *p.profile);
    }
    if (computed) {
        std::lock_guard lock(profile_mutex_);
        std::map<std::string, ProductProfile> ok;
        json failures = json::object();
        for (const auto& [id, p] : profiles_) {
            if (p.profile) ok.emplace(id, *p.profile);
            else failures[id] = p.failure;
        }
        save_profiles(ok, store_->profiles_path());
        const std::string body = failures.dump(1) + "\n";
        write_file_bytes(store_->root() / "profile_failures.json",
                         std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    }
    return out;
}

std::vector<CategorySample> Orchestrator::room_categories(RoomType room, std::size_t k) {
    return list_room_categories(catalog_, room, profiles_for(), k);
}

BatchInfo Orchestrator::create_batch(const BatchSpec& spec) {
    spec.validate();
    const std::string id = batch_id_for(spec);
    if (auto existing = store_->batch(id)) return batch_info_from_json(*existing);
    if (!spec.has(Ablation::A1)) {
        for (const auto& cat : {spec.category_a, spec.category_b}) {
            if (!catalog_.category_index.count(normalize_category(cat))) {
                throw UnknownCategory("category '" + cat + "' is not in the catalog");
            }
            const auto profiles = profiles_for(cat);
            if (room_members(catalog_, profiles, spec.room_type, cat).empty()) {
                throw UnknownCategory("category '" + cat + "' has no product for " + to_string(spec.room_type));
            }
        }
    }
    BatchInfo info;
    info.id = id;
    info.spec = spec;
    info.state = BatchState::queued;
    for (int i = 0; i < spec.count; ++i) {
        info.generation_ids.push_back(
            "g" + sha256_hex(json{{"batch", id}, {"index", i}}.dump()).substr(0, 31));
    }
    info.created_at = info.updated_at = utc_timestamp();
    store_->save_batch(batch_info_to_json(info));
    return info;
}

BatchInfo Orchestrator::batch(const std::string& batch_id) const {
    const auto j = store_->batch(batch_id);
    if (!j) throw UnknownBatch("no batch " + batch_id);
    return batch_info_from_json(*j);
}

GenerationRecord Orchestrator::generation(const std::string& id) const {
    const auto j = store_->record(id);
    if (!j) throw UnknownGeneration("no generation " + id);
    return generation_from_json(*j);
}

std::vector<GenerationRecord> Orchestrator::batch_records(const std::string& batch_id) const {
    const BatchInfo info = batch(batch_id);
    std::vector<GenerationRecord> out;
    for (const auto& id : info.generation_ids) {
        if (const auto j = store_->record(id)) out.push_back(generation_from_json(*j));
    }
    return out;
}

void Orchestrator::persist_tilts() { tilts_.save(store_->tilts_path()); }

std::vector<GenerationRecord> Orchestrator::run_batch(const std::string& batch_id) {
    BatchInfo info;
    {
        std::lock_guard lock(batch_mutex_);
        info = batch(batch_id);
        if (info.state == BatchState::completed) return batch_records(batch_id);
        if (running_.count(batch_id)) throw BatchConflict("batch " + batch_id + " is already running");
        running_.insert(batch_id);
        info.state = BatchState::running;
        info.updated_at = utc_timestamp();
        store_->save_batch(batch_info_to_json(info));
    }
    struct Release {
        Orchestrator* self;
        std::string id;
        ~Release() {
            std::lock_guard lock(self->batch_mutex_);
            self->running_.erase(id);
        }
    } release{this, batch_id};

    const BatchSpec& spec = info.spec;
    std::vector<PairCandidate> pairs;
    std::string pairing_failure;
    if (!spec.has(Ablation::A1)) {
        try {
            auto profiles = profiles_for(spec.category_a);
            profiles.merge(profiles_for(spec.category_b));
            pairs = pair_candidates(catalog_, profiles, spec.room_type, spec.category_a, spec.category_b,
                                    spec.threshold_deg, static_cast<std::size_t>(spec.count),
                                    derive_seed(spec.seed, kPairStream), tilts_)
                        .pairs;
        } catch (const std::exception& e) {
            pairing_failure = error_reason(e);
        }
        persist_tilts();
    }

    std::vector<GenerationRecord> results(static_cast<std::size_t>(spec.count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < spec.count; i = next++) {
            std::optional<PairCandidate> pair;
            if (!pairs.empty()) pair = pairs[static_cast<std::size_t>(i) % pairs.size()];
            results[i] = run_generation(info, i, pair, pairing_failure);
            store_->append_record(generation_to_json(results[i]));
        }
    };
    const int n_workers = std::clamp(config_.workers, 1, spec.count);
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    info.state = BatchState::completed;
    info.ok_count = static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [](const GenerationRecord& r) { return r.status.ok; }));
    info.failed_count = results.size() - info.ok_count;
    info.updated_at = utc_timestamp();
    store_->save_batch(batch_info_to_json(info));
    return results;
}

bool Orchestrator::start_batch(const std::string& batch_id) {
    std::lock_guard lock(batch_mutex_);
    const BatchInfo info = batch(batch_id);
    if (info.state == BatchState::completed || running_.count(batch_id)) return false;
    background_.emplace_back([this, batch_id] {
        try {
            run_batch(batch_id);
        } catch (const std::exception&) {
            // Generation failures live in the records; a conflict means another run owns the batch.
        }
    });
    return true;
}

GenerationRecord Orchestrator::run_generation(const BatchInfo& batch, int index,
                                              const std::optional<PairCandidate>& pair,
                                              const std::string& pairing_failure) {
    const BatchSpec& spec = batch.spec;
    GenerationRecord rec;
    rec.id = batch.generation_ids.at(static_cast<std::size_t>(index));
    rec.batch_id = batch.id;
    rec.index = index;
    rec.room_type = spec.room_type;
    rec.style = text::trim(spec.style);
    rec.category_a = normalize_category(spec.category_a);
    rec.category_b = normalize_category(spec.category_b);
    rec.ablations = spec.ablations;
    rec.generation_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(index));
    rec.background_seed = derive_seed(rec.generation_seed, kBackgroundStream);
    rec.control_strength = spec.control_strength;
    rec.remove_white_bg = spec.remove_white_bg;
    rec.protect_margin_px = config_.protect_margin_px;
    rec.prompts.negative = config_.negative_prompt;

    if (spec.has(Ablation::A1)) {
        std::vector<std::string> ids;
        for (const auto& [id, r] : catalog_.records) ids.push_back(id);
        if (ids.size() < 2) {
            rec.status = {false, "pairing", "NoCompatiblePairs: the catalog has fewer than two products"};
        } else {
            std::mt19937_64 rng(derive_seed(rec.generation_seed, kRandomPairStream));
            std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
            const std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            while (b == a) b = pick(rng);
            rec.pair = PairCandidate{std::min(ids[a], ids[b]), std::max(ids[a], ids[b]), 0.0, false, spec.room_type};
        }
    } else if (pair) {
        rec.pair = pair;
    } else {
        rec.status = {false, "pairing", pairing_failure.empty() ? "NoCompatiblePairs: no pair" : pairing_failure};
    }
    if (rec.status.ok) execute(rec, Stage::profiling, {}, nullptr);
    if (rec.created_at.empty()) rec.created_at = utc_timestamp();
    return rec;
}

void Orchestrator::execute(GenerationRecord& rec, Stage from, const RegenerateOverrides& ov,
                           const GenerationRecord* parent) {
    using clock = std::chrono::steady_clock;
    Stage current = from;
    clock::time_point started = clock::now();
    auto begin = [&](Stage s) {
        current = s;
        started = clock::now();
    };
    auto finish = [&] {
        const double elapsed = std::chrono::duration<double>(clock::now() - started).count();
        if (elapsed > config_.stage_timeout_s) {
            throw StageTimeout(to_string(current) + " stage took " + text::format_fixed(elapsed, 1) + " s (budget " +
                               text::format_fixed(config_.stage_timeout_s, 1) + " s)");
        }
    };
    try {
        const PairCandidate& pair = rec.pair.value();
        const bool a2 = rec.has(Ablation::A2);

        if (from <= Stage::profiling) {
            begin(Stage::profiling);
            const ProfileLookup pa = profile(pair.item_a);
            const ProfileLookup pb = profile(pair.item_b);
            if (!pa.profile) throw ProfileRejected(pair.item_a + ": " + pa.failure);
            if (!pb.profile) throw ProfileRejected(pair.item_b + ": " + pb.failure);
            rec.dims_a = a2 ? std::nullopt : pa.profile->dims_cm;
            rec.dims_b = a2 ? std::nullopt : pb.profile->dims_cm;
            finish();
        }

        begin(Stage::pairing);
        const RgbImage image_a = catalog_.main_image(pair.item_a);
        const RgbImage image_b = catalog_.main_image(pair.item_b);

        if (from <= Stage::scene) {
            begin(Stage::scene);
            rec.brief = describe_scene(*gateway_.chat, image_a, image_b, rec.room_type, rec.style, gateway_.chat_model,
                                       &rec.diagnostics);
            finish();
        }
        if (ov.layout_prompt) {
            bool truncated = false;
            rec.brief.value().layout_prompt = text::truncate_words(text::trim(*ov.layout_prompt), kMaxLayoutPromptWords,
                                                                   &truncated);
            if (truncated) rec.diagnostics.push_back("layout prompt override truncated to 30 words");
        }

        RgbImage canvas;
        GrayImage alpha;
        if (from <= Stage::compose) {
            begin(Stage::pairing);
            const Cutout cut_a = extract_cutout(image_a, rec.remove_white_bg, *gateway_.segmenter, pair.item_a);
            const Cutout cut_b = extract_cutout(image_b, rec.remove_white_bg, *gateway_.segmenter, pair.item_b);

            const SceneBrief& brief = rec.brief.value();
            const std::array<std::string, 2> labels = {layout_product_label(brief.desc_a, rec.dims_a),
                                                       layout_product_label(brief.desc_b, rec.dims_b)};
            ValidationPolicy policy = config_.layout_policy;
            policy.check_relative_scale = !a2;
            if (ov.layout_spec) {
                begin(Stage::layout);
                LayoutSpec spec = *ov.layout_spec;
                for (int i = 0; i < 2; ++i) {
                    if (spec.boxes[i].label.empty()) spec.boxes[i].label = rec.layout ? rec.layout->boxes[i].label : labels[i];
                }
                LayoutPlan plan = accept_user_layout(spec, cut_a.aspect(), cut_b.aspect(), rec.dims_a, rec.dims_b, policy);
                rec.layout = plan.spec;
                rec.validation = plan.report;
                rec.layout_clamped = plan.clamped;
                rec.layout_attempts = 0;
                rec.prompts.layout_user.clear();
                rec.prompts.layout_raw = plan.raw;
                finish();
            } else if (from <= Stage::layout) {
                begin(Stage::layout);
                if (rec.has(Ablation::A3)) {
                    rec.layout = side_by_side_layout(labels[0], cut_a.aspect(), labels[1], cut_b.aspect());
                    rec.validation = validate_layout(*rec.layout, cut_a.aspect(), cut_b.aspect(), rec.dims_a,
                                                     rec.dims_b, policy);
                    rec.layout_clamped = false;
                    rec.layout_attempts = 0;
                    rec.prompts.layout_user.clear();
                    rec.prompts.layout_raw.clear();
                } else {
                    LayoutTextRequest req{labels[0], labels[1], cut_a.aspect(), cut_b.aspect(), brief.layout_prompt, {}};
                    LayoutPlan plan = plan_layout(*gateway_.chat, req, image_a, image_b, rec.dims_a, rec.dims_b, policy,
                                                  gateway_.chat_model);
                    rec.layout = plan.spec;
                    rec.validation = plan.report;
                    rec.layout_clamped = plan.clamped;
                    rec.layout_attempts = static_cast<int>(plan.attempts.size());
                    rec.prompts.layout_user.clear();
                    // Rebuild the user prompt of each attempt for provenance.
                    LayoutTextRequest replayed = req;
                    for (const auto& attempt : plan.attempts) {
                        rec.prompts.layout_user.push_back(
                            layout_chat_request(replayed, {}, {}, gateway_.chat_model).user_text);
                        replayed.feedback.clear();
                        if (!attempt.error.empty()) {
                            replayed.feedback.push_back(std::string("the layout could not be parsed: ") + attempt.error);
                        } else {
                            for (const auto& f : attempt.report.findings) {
                                if (f.severity == LayoutAction::retry) replayed.feedback.push_back(f.message);
                            }
                        }
                    }
                    rec.prompts.layout_raw = plan.raw;
                }
                finish();
            }
            rec.layout->item_ids = {pair.item_a, pair.item_b};

            begin(Stage::compose);
            ComposedCanvas composed = compose_canvas(*rec.layout, cut_a, cut_b);
            canvas = std::move(composed.canvas);
            alpha = std::move(composed.alpha);
            rec.artifacts.canvas = store_->put_artifact(encode_png(canvas));
            rec.artifacts.alpha = store_->put_artifact(encode_png(alpha));
            finish();
        } else {
            begin(Stage::compose);
            const GenerationRecord& base = parent ? *parent : rec;
            canvas = decode_rgb(store_->read_artifact(base.artifacts.canvas));
            alpha = decode_gray(store_->read_artifact(base.artifacts.alpha));
            rec.artifacts.canvas = base.artifacts.canvas;
            rec.artifacts.alpha = base.artifacts.alpha;
            finish();
        }

        begin(Stage::background);
        if (ov.background_prompt) rec.prompts.background_edit = *ov.background_prompt;
        const BackgroundPrompt bg = build_background_prompt(rec.brief.value(), rec.prompts.background_edit,
                                                            rec.prompts.negative.empty() ? config_.negative_prompt
                                                                                         : rec.prompts.negative);
        rec.prompts.background = bg.prompt;
        rec.prompts.negative = bg.negative_prompt;
        if (ov.control_strength) rec.control_strength = *ov.control_strength;
        if (ov.seed) rec.background_seed = *ov.seed;
        BackgroundRequest req;
        req.canvas = std::move(canvas);
        req.foreground_alpha = std::move(alpha);
        req.prompt = bg.prompt;
        req.negative_prompt = bg.negative_prompt;
        req.control_strength = rec.control_strength;
        req.seed = rec.background_seed;
        req.protect_margin_px = rec.protect_margin_px;
        req.steps = rec.steps;
        BackgroundResult result;
        {
            work_->inpaint_slots.acquire();
            struct Slot {
                Work* w;
                ~Slot() { w->inpaint_slots.release(); }
            } slot{work_.get()};
            result = generate_background(*gateway_.inpainter, req, rec.has(Ablation::A4));
        }
        rec.artifacts.mask = store_->put_artifact(encode_png(result.inpaint_mask));
        rec.artifacts.ad = store_->put_artifact(encode_png(result.ad_image));
        rec.artifacts.raw_ad = store_->put_artifact(encode_png(result.raw_image));
        rec.preservation = result.preservation;
        rec.audit = result.audit;
        finish();
        rec.status = {};
    } catch (const EmptyForeground& e) {
        rec.status = {false, "pairing", error_reason(e)};
    } catch (const std::exception& e) {
        rec.status = {false, to_string(current), error_reason(e)};
    }
}

GenerationRecord Orchestrator::regenerate(const std::string& id, const RegenerateOverrides& overrides) {
    overrides.validate();
    const GenerationRecord parent = generation(id);
    if (!parent.pair) throw InvalidArgument("generation " + id + " failed during pairing and cannot be regenerated");

    Stage from = Stage::background;
    if (overrides.layout_spec || overrides.remove_white_bg) from = std::min(from, Stage::compose);
    if (overrides.layout_prompt && !overrides.layout_spec) from = std::min(from, Stage::layout);
    if (!parent.status.ok) from = std::min(from, parse_stage(parent.status.stage));
    if (!parent.brief) from = std::min(from, Stage::profiling);

    const json ov = overrides_to_json(overrides);
    const std::string new_id = "g" + sha256_hex(json{{"parent", parent.id}, {"overrides", ov}}.dump()).substr(0, 31);
    if (const auto existing = store_->record(new_id)) return generation_from_json(*existing);

    GenerationRecord rec = parent;
    rec.id = new_id;
    rec.parent_id = parent.id;
    rec.overrides = ov;
    rec.created_at.clear();
    rec.status = {};
    if (overrides.remove_white_bg) rec.remove_white_bg = *overrides.remove_white_bg;
    if (from <= Stage::profiling) rec.diagnostics.clear();
    execute(rec, from == Stage::pairing ? Stage::profiling : from, overrides, &parent);
    rec.created_at = utc_timestamp();
    store_->append_record(generation_to_json(rec));
    return rec;
}

ReplayResult Orchestrator::replay(const GenerationRecord& rec) {
    ReplayResult out;
    out.expected = rec.artifact_hashes();
    if (!rec.status.ok || !rec.pair || !rec.layout || !rec.brief) {
        out.match = false;
        return out;
    }
    const Cutout cut_a = extract_cutout(catalog_.main_image(rec.pair->item_a), rec.remove_white_bg,
                                        *gateway_.segmenter, rec.pair->item_a);
    const Cutout cut_b = extract_cutout(catalog_.main_image(rec.pair->item_b), rec.remove_white_bg,
                                        *gateway_.segmenter, rec.pair->item_b);
    ComposedCanvas composed = compose_canvas(*rec.layout, cut_a, cut_b);
    out.actual.push_back(hash_png(encode_png(composed.canvas)));
    out.actual.push_back(hash_png(encode_png(composed.alpha)));
    BackgroundRequest req;
    req.canvas = std::move(composed.canvas);
    req.foreground_alpha = std::move(composed.alpha);
    req.prompt = rec.prompts.background;
    req.negative_prompt = rec.prompts.negative;
    req.control_strength = rec.control_strength;
    req.seed = rec.background_seed;
    req.protect_margin_px = rec.protect_margin_px;
    req.steps = rec.steps;
    const BackgroundResult result = generate_background(*gateway_.inpainter, req, rec.has(Ablation::A4));
    out.actual.push_back(hash_png(encode_png(result.inpaint_mask)));
    out.actual.push_back(hash_png(encode_png(result.ad_image)));
    out.actual.push_back(hash_png(encode_png(result.raw_image)));
    out.match = out.actual == out.expected;
    return out;
}

std::vector<GalleryGroup> Orchestrator::final_gallery(RoomType room) const {
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    const auto records = store_->records();
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        const json& j = *it;
        if (j.value("room_type", "") != to_string(room)) continue;
        if (j.value("status", json::object()).value("state", "") != "ok") continue;
        std::string a = j.value("category_a", "");
        std::string b = j.value("category_b", "");
        if (b < a) std::swap(a, b);
        groups[{a, b}].push_back(j.at("id").get<std::string>());
    }
    std::vector<GalleryGroup> out;
    for (auto& [key, ids] : groups) out.push_back({key.first, key.second, std::move(ids)});
    return out;
}

Collection Orchestrator::add_to_collection(const std::string& name, const std::vector<std::string>& ids) {
    if (!valid_collection_name(name)) throw InvalidArgument("invalid collection name '" + name + "'");
    for (const auto& id : ids) {
        if (!store_->record(id)) throw UnknownGeneration("no generation " + id);
    }
    std::lock_guard lock(collection_mutex_);
    Collection c;
    if (const auto existing = store_->collection(name)) {
        c = collection_from_json(*existing);
    } else {
        c.name = name;
        c.created_at = utc_timestamp();
    }
    for (const auto& id : ids) {
        if (std::find(c.entries.begin(), c.entries.end(), id) == c.entries.end()) c.entries.push_back(id);
    }
    c.updated_at = utc_timestamp();
    store_->save_collection(collection_to_json(c));
    return c;
}

Collection Orchestrator::add_batch_to_collection(const std::string& name, const std::string& batch_id) {
    const BatchInfo info = batch(batch_id);
    std::vector<std::string> ids;
    for (const auto& id : info.generation_ids) {
        if (store_->record(id)) ids.push_back(id);
    }
    if (ids.empty()) throw UnknownGeneration("batch " + batch_id + " has no generated records yet");
    return add_to_collection(name, ids);
}

Collection Orchestrator::collection(const std::string& name) const {
    const auto j = store_->collection(name);
    if (!j) throw UnknownCollection("no collection " + name);
    return collection_from_json(*j);
}

}  // namespace adgen
