#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adgen/catalog.hpp"
#include "adgen/gateway.hpp"
#include "adgen/geometry.hpp"
#include "adgen/room_type.hpp"

namespace adgen {

struct Dimensions {
    double length = 0.0;
    double width = 0.0;
    double height = 0.0;
    bool operator==(const Dimensions&) const = default;
};

struct ProductProfile {
    std::string item_id;
    bool category_match = true;
    std::string short_description;  // at most three words
    std::optional<Dimensions> dims_cm;
    RoomType room_type = RoomType::living_room;
    bool operator==(const ProductProfile&) const = default;
};

nlohmann::json profile_to_json(const ProductProfile& p);
ProductProfile profile_from_json(const nlohmann::json& j);
void save_profiles(const std::map<std::string, ProductProfile>& profiles, const std::filesystem::path& path);
std::map<std::string, ProductProfile> load_profiles(const std::filesystem::path& path);

/// Tolerant "L x W x H [unit]" extraction. Inches, millimetres and metres are
/// converted to centimetres; anything outside (0, 1000) cm yields nullopt.
std::optional<Dimensions> parse_dimensions(std::string_view answer);

/// Fills the profiling prompt for the product, asks the chat model and
/// parses the four answers. Throws ProfileRejected when the model says the
/// image is not of `category`, UnparseableModelOutput when the reply cannot be
/// read.
ProductProfile profile_product(VisionChatBackend& chat, const ProductRecord& record, const RgbImage& image,
                               std::string_view category, const std::string& model_id = "gpt-4o");

/// Least-significant-eigenvector plane through the points. The normal points
/// "up" in the y-down camera frame (normal.y <= 0); the plane is
/// normal . X + offset = 0.
struct PlaneFit {
    Vec3 normal = Vec3(0, -1, 0);
    double offset = 0.0;
    double inlier_ratio = 0.0;
    std::size_t inlier_count = 0;
};

struct TiltEstimate {
    double tilt_deg = 0.0;  // angle between floor normal and camera up (0,-1,0)
    PlaneFit plane;
    double quality = 0.0;   // inlier ratio of the plane fit
};

struct RansacParams {
    int iterations = 256;
    double inlier_dist_m = 0.02;
    std::uint64_t seed = 0;
    double min_inlier_ratio = 0.3;
};

inline constexpr std::size_t kMinFloorPixels = 200;
inline constexpr std::size_t kMaxFloorPoints = 20000;

/// (d(u-cx)/fx, d(v-cy)/fy, d) for every masked pixel with valid depth,
/// uniformly subsampled (seeded, order preserving) to at most `max_points`.
/// Throws TooFewFloorPixels below 200 usable pixels.
PointCloud backproject_floor(const DepthMap& depth, const SegmentationMask& floor_mask,
                             const CameraIntrinsics& intrinsics, std::size_t max_points = kMaxFloorPoints,
                             std::uint64_t seed = 0);

/// Total-least-squares plane of `points` (all of them are treated as inliers).
PlaneFit least_squares_plane(std::span<const Vec3> points);

/// RANSAC over 3-point samples followed by a least-squares refit on the
/// inliers. Throws DegenerateGeometry for collinear input or when the best
/// inlier ratio falls below `params.min_inlier_ratio`.
PlaneFit fit_floor_plane(const PointCloud& points, const RansacParams& params = {});

TiltEstimate camera_tilt(const PlaneFit& plane);

struct ViewpointComparison {
    bool compatible = false;
    double angle_diff_deg = 0.0;   // |tilt_a - tilt_b|, the filtered quantity
    double normal_angle_deg = 0.0; // full 3-vector angle, audit only
};

inline constexpr double kDefaultViewpointThresholdDeg = 15.0;

ViewpointComparison viewpoint_compatible(const TiltEstimate& a, const TiltEstimate& b,
                                         double threshold_deg = kDefaultViewpointThresholdDeg);

struct TiltOptions {
    double hfov_deg = kDefaultHorizontalFovDeg;
    RansacParams ransac;
    std::size_t max_points = kMaxFloorPoints;
    double white_border_fraction = 0.9;  // border share that marks a white studio background
    double contact_band_fraction = 0.1;  // lowest share of foreground rows used as floor contact
};

/// True when the image border is predominantly near-white, i.e. a catalog
/// cutout with no visible floor.
bool has_white_background(const RgbImage& image, double fraction = 0.9, int threshold = 245);

/// Floor pixels: segment(image, "floor"), or for white-background catalog
/// shots the lowest 10% of the product's foreground rows.
SegmentationMask floor_mask_for(const RgbImage& image, SegmentationBackend& segmenter, const TiltOptions& options = {});

TiltEstimate estimate_product_tilt(const RgbImage& image, const ModelGateway& gateway, const TiltOptions& options = {});

struct TiltLookup {
    std::optional<TiltEstimate> estimate;
    std::string failure;  // set when estimate is empty
};

class TiltSource {
public:
    virtual ~TiltSource() = default;
    virtual TiltLookup tilt(const std::string& item_id) = 0;
};

/// Estimates each product's tilt from its main image once and caches the
/// outcome, failures included. Safe for concurrent callers.
class CachedTiltSource final : public TiltSource {
public:
    CachedTiltSource(const Catalog& catalog, ModelGateway gateway, TiltOptions options = {});
    TiltLookup tilt(const std::string& item_id) override;

    void load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::size_t size() const;

private:
    const Catalog& catalog_;
    ModelGateway gateway_;
    TiltOptions options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, TiltLookup> cache_;
};

struct PairCandidate {
    std::string item_a;  // item_a < item_b
    std::string item_b;
    double angle_diff_deg = 0.0;
    bool compatible = false;
    RoomType room_type = RoomType::living_room;
    bool operator==(const PairCandidate&) const = default;
};

struct PairReject {
    std::string item_a;
    std::string item_b;
    std::string reason;
};

struct PairingResult {
    std::vector<PairCandidate> pairs;
    std::vector<PairReject> rejects;
};

nlohmann::json pair_to_json(const PairCandidate& p);
PairCandidate pair_from_json(const nlohmann::json& j);

/// Products of `category` whose profile places them in `room`, sorted.
std::vector<std::string> room_members(const Catalog& catalog, const std::map<std::string, ProductProfile>& profiles,
                                      RoomType room, std::string_view category);

/// Seeded cross-category sampling filtered by room agreement and viewpoint
/// compatibility. Returns up to `count` compatible pairs plus every reject
/// seen on the way. Throws UnknownCategory when a category has no member in
/// `room`, NoCompatiblePairs when every candidate is rejected.
PairingResult pair_candidates(const Catalog& catalog, const std::map<std::string, ProductProfile>& profiles,
                              RoomType room, std::string_view category_a, std::string_view category_b,
                              double threshold_deg, std::size_t count, std::uint64_t seed, TiltSource& tilts);

}  // namespace adgen
