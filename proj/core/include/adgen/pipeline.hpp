#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adgen/background.hpp"
#include "adgen/catalog.hpp"
#include "adgen/gateway.hpp"
#include "adgen/layout.hpp"
#include "adgen/pairing.hpp"
#include "adgen/store.hpp"

namespace adgen {

enum class Ablation { A1, A2, A3, A4 };
std::string to_string(Ablation a);
Ablation parse_ablation(std::string_view text);

struct BatchSpec {
    RoomType room_type = RoomType::living_room;
    std::string style = "Modern";
    std::string category_a;
    std::string category_b;
    int count = 1;
    std::uint64_t seed = 0;
    std::set<Ablation> ablations;
    double threshold_deg = kDefaultViewpointThresholdDeg;
    double control_strength = kDefaultControlStrength;
    bool remove_white_bg = true;

    bool has(Ablation a) const { return ablations.count(a) != 0; }
    /// Throws InvalidSpec.
    void validate() const;
    bool operator==(const BatchSpec&) const = default;
};

nlohmann::json batch_spec_to_json(const BatchSpec& s);
/// Missing optional fields take their defaults. Throws InvalidSpec.
BatchSpec batch_spec_from_json(const nlohmann::json& j);
/// Deterministic id: hash of the canonical spec.
std::string batch_id_for(const BatchSpec& s);

enum class BatchState { queued, running, completed };
std::string to_string(BatchState s);

struct BatchInfo {
    std::string id;
    BatchSpec spec;
    BatchState state = BatchState::queued;
    std::vector<std::string> generation_ids;  // by generation index, filled by run_batch
    std::size_t ok_count = 0;
    std::size_t failed_count = 0;
    std::string created_at;
    std::string updated_at;
};

nlohmann::json batch_info_to_json(const BatchInfo& b);
BatchInfo batch_info_from_json(const nlohmann::json& j);

enum class Stage { pairing, profiling, scene, layout, compose, background };
std::string to_string(Stage s);
Stage parse_stage(std::string_view text);

struct GenerationStatus {
    bool ok = true;
    std::string stage;   // set when failed
    std::string reason;  // "<ErrorKind>: message"
};

struct ArtifactRefs {
    std::string canvas;
    std::string alpha;
    std::string mask;
    std::string ad;
    std::string raw_ad;  // backend output before post-compositing
};

struct GenerationPrompts {
    std::vector<std::string> layout_user;  // user prompt of every layout attempt
    std::string layout_raw;                // model text of the accepted attempt
    std::optional<std::string> background_edit;
    std::string background;
    std::string negative;
};

struct GenerationRecord {
    std::string id;
    std::string batch_id;
    int index = 0;
    std::string parent_id;
    RoomType room_type = RoomType::living_room;
    std::string style;
    std::string category_a;
    std::string category_b;
    std::set<Ablation> ablations;
    std::optional<PairCandidate> pair;
    std::optional<Dimensions> dims_a;  // as used by layout (absent under A2)
    std::optional<Dimensions> dims_b;
    std::optional<SceneBrief> brief;
    std::optional<LayoutSpec> layout;
    ValidationReport validation;
    bool layout_clamped = false;
    int layout_attempts = 0;
    GenerationPrompts prompts;
    std::uint64_t generation_seed = 0;
    std::uint64_t background_seed = 0;
    double control_strength = kDefaultControlStrength;
    bool remove_white_bg = true;
    int protect_margin_px = kDefaultProtectMarginPx;
    int steps = kDefaultInpaintSteps;
    ArtifactRefs artifacts;
    PreservationReport preservation;
    PreservationReport audit;
    GenerationStatus status;
    std::vector<std::string> diagnostics;
    nlohmann::json overrides = nlohmann::json::object();
    std::string created_at;

    bool has(Ablation a) const { return ablations.count(a) != 0; }
    /// Hashes of every artifact, in a fixed order.
    std::vector<std::string> artifact_hashes() const;
};

nlohmann::json generation_to_json(const GenerationRecord& r);
GenerationRecord generation_from_json(const nlohmann::json& j);

struct RegenerateOverrides {
    std::optional<LayoutSpec> layout_spec;
    std::optional<std::string> layout_prompt;
    std::optional<std::string> background_prompt;
    std::optional<double> control_strength;
    std::optional<bool> remove_white_bg;
    std::optional<std::uint64_t> seed;

    /// Throws InvalidArgument.
    void validate() const;
};

/// `layout_spec` may be line-format text or {"boxes": [...]}.
RegenerateOverrides overrides_from_json(const nlohmann::json& j);
nlohmann::json overrides_to_json(const RegenerateOverrides& o);
nlohmann::json layout_to_json(const LayoutSpec& spec);
LayoutSpec layout_from_json(const nlohmann::json& j);

struct ReplayResult {
    bool match = true;
    std::vector<std::string> expected;
    std::vector<std::string> actual;
};

struct GalleryGroup {
    std::string category_a;  // category pair, sorted
    std::string category_b;
    std::vector<std::string> generation_ids;  // newest first
};

struct Collection {
    std::string name;
    std::vector<std::string> entries;
    std::string created_at;
    std::string updated_at;
};

nlohmann::json collection_to_json(const Collection& c);
Collection collection_from_json(const nlohmann::json& j);

struct OrchestratorConfig {
    int workers = 2;
    int inpaint_inflight = 2;
    double stage_timeout_s = 60.0;
    ValidationPolicy layout_policy;
    TiltOptions tilt;
    int protect_margin_px = kDefaultProtectMarginPx;
    std::string negative_prompt = kDefaultNegativePrompt;
    std::vector<std::string> styles = {"Modern", "Coastal", "Bohemian", "Festive"};
};

nlohmann::json orchestrator_config_to_json(const OrchestratorConfig& c);
/// Reads {"workers", "inpaint_inflight", "stage_timeout_s", "protect_margin_px",
/// "negative_prompt", "styles", "aspect_tolerance", "relative_scale_tolerance",
/// "max_layout_retries", "ransac_iterations", "inlier_dist_m"}; absent keys
/// keep their defaults.
OrchestratorConfig orchestrator_config_from_json(const nlohmann::json& j);

struct ProfileLookup {
    std::optional<ProductProfile> profile;
    std::string failure;
};

/// Runs batches and single generations against a catalog, a model gateway and
/// a store. Thread-safe.
class Orchestrator {
public:
    Orchestrator(Catalog catalog, ModelGateway gateway, std::shared_ptr<Store> store, OrchestratorConfig config = {});
    ~Orchestrator();
    Orchestrator(const Orchestrator&) = delete;
    Orchestrator& operator=(const Orchestrator&) = delete;

    const Catalog& catalog() const { return catalog_; }
    const OrchestratorConfig& config() const { return config_; }
    Store& store() { return *store_; }

    /// Profile of a product under its first listed category, computed once.
    ProfileLookup profile(const std::string& item_id);
    /// Profiles every product of the category (or of the whole catalog).
    std::map<std::string, ProductProfile> profiles_for(const std::optional<std::string>& category = std::nullopt);
    std::vector<CategorySample> room_categories(RoomType room, std::size_t k = 6);

    /// Idempotent: the same spec returns the stored batch.
    BatchInfo create_batch(const BatchSpec& spec);
    BatchInfo batch(const std::string& batch_id) const;
    /// Runs every generation of a queued batch; a completed batch returns its
    /// records unchanged. Throws BatchConflict while another run is active.
    std::vector<GenerationRecord> run_batch(const std::string& batch_id);
    /// run_batch on a background thread. Returns false when the batch was
    /// already running or completed.
    bool start_batch(const std::string& batch_id);
    void wait_idle();

    GenerationRecord generation(const std::string& id) const;
    std::vector<GenerationRecord> batch_records(const std::string& batch_id) const;
    GenerationRecord regenerate(const std::string& id, const RegenerateOverrides& overrides);
    ReplayResult replay(const GenerationRecord& record);

    std::vector<GalleryGroup> final_gallery(RoomType room) const;

    Collection add_to_collection(const std::string& name, const std::vector<std::string>& ids);
    Collection add_batch_to_collection(const std::string& name, const std::string& batch_id);
    Collection collection(const std::string& name) const;

private:
    struct Work;

    GenerationRecord run_generation(const BatchInfo& batch, int index, const std::optional<PairCandidate>& pair,
                                    const std::string& pairing_failure);
    void execute(GenerationRecord& rec, Stage from, const RegenerateOverrides& overrides,
                 const GenerationRecord* parent);
    void persist_tilts();

    Catalog catalog_;
    ModelGateway gateway_;
    std::shared_ptr<Store> store_;
    OrchestratorConfig config_;
    CachedTiltSource tilts_;

    mutable std::mutex profile_mutex_;
    std::map<std::string, ProfileLookup> profiles_;

    mutable std::mutex batch_mutex_;
    std::set<std::string> running_;
    std::vector<std::thread> background_;

    std::mutex collection_mutex_;
    std::unique_ptr<Work> work_;
};

}  // namespace adgen
