#pragma once

#include <string>

#include "hoi/image.hpp"
#include "hoi/supervision.hpp"

namespace hoi {

enum class ObjectShape : uint32_t { box = 0, cylinder = 1, sphere = 2 };

// One synthetic hand-object sample with everything needed for supervision.
// Stored fields are re-derivable from (seed, parameters): re-rasterizing
// reproduces image/seg, projecting FK reproduces keypoints2d, and the SDF
// oracle reproduces every stored distance.
struct SceneRecord {
    uint64_t seed = 0;
    int image_size = 0;
    CameraIntrinsics camera;
    HandParams hand_params;
    ObjectShape object_shape = ObjectShape::box;
    Vec3 object_dims = Vec3::Zero();  // box: half extents; cylinder: (r, hh, 0); sphere: (r,0,0)
    ObjectPose object_pose;
    std::vector<uint8_t> image;  // RGB, 3 * S * S
    std::vector<uint8_t> seg;    // S * S, 0 bg / 1 hand / 2 object
    std::array<Vec2, kHandJoints> keypoints2d{};
    std::vector<SdfSample> sdf_samples;
};

struct SceneConfig {
    int image_size = 64;
    int sdf_samples = 512;
    double flexion_range_deg = 60.0;    // per-joint flexion range (+/-)
    double abduction_range_deg = 15.0;  // base-joint abduction range (+/-)
    double hand_z_min = 0.35, hand_z_max = 0.60;
    double object_z_min = 0.30, object_z_max = 0.80;
    double beta_range = 0.08;

    void validate() const;
    CameraIntrinsics camera() const {
        const double f = 1.6 * image_size;
        const double c = 0.5 * (image_size - 1);
        return {f, f, c, c};
    }
};

TriangleMesh make_object_mesh(ObjectShape shape, const Vec3& dims);

struct RasterOutput {
    Image image;
    std::vector<uint8_t> seg;
    std::vector<float> depth;
};

// Z-buffered triangle rasterization with flat per-face lambertian shading.
// Pixel centers at integer coordinates; a pixel is covered when its center
// satisfies the inclusive half-plane test for the triangle.
RasterOutput rasterize(const TriangleMesh& hand_mesh, const TriangleMesh& obj_mesh,
                       const CameraIntrinsics& k, int size);

// Deterministic per seed; hand pose from per-joint ranges, object placed near
// the palm, then image/seg/keypoints/SDF samples derived from the parameters.
SceneRecord sample_scene(uint64_t seed, const SceneConfig& cfg, const HandSkeleton& skel);

// Posed meshes for a record's parameters.
TriangleMesh posed_hand_mesh(const SceneRecord& rec, const HandSkeleton& skel);
TriangleMesh posed_object_mesh(const SceneRecord& rec);

// Scene-centered normalization box for SDF query encoding: maps the joint
// mesh bounds (inflated 20%) into [-1, 1]^3 uniformly.
void scene_normalization(const SceneRecord& rec, const HandSkeleton& skel, Vec3* center,
                         double* half_extent);

// Binary record format, little-endian, fields in declared order:
//   magic "HOISCN01" (8 bytes), version u32 = 1, seed u64, image_size u32,
//   fx fy cx cy f64, hand rotations 16 x (a,b) f64[6], beta f64[10],
//   root_translation f64[3], object shape u32, dims f64[3], rotation f64[6],
//   translation f64[3], image u8[3*S*S], seg u8[S*S], keypoints f64[21*2],
//   sdf count u32, then per sample p f64[3], d_hand f64, d_obj f64, near u8.
void write_record(const SceneRecord& rec, const std::string& path);
SceneRecord read_record(const std::string& path);

// Dataset layout: <dir>/meta.json plus <dir>/{train,test}/scene_NNNNN.bin
// (and a .ppm dump of each image). Manifest keys: format_version, image_size,
// patch_size, seed_base, sdf_samples, splits.{train,test}.
struct DatasetMeta {
    int format_version = 1;
    int image_size = 64;
    int patch_size = 8;
    int sdf_samples = 512;
    uint64_t seed_base = 0;
    int train_scenes = 0;
    int test_scenes = 0;
};

void write_dataset(const std::string& dir, const SceneConfig& cfg, const HandSkeleton& skel,
                   int train_scenes, int test_scenes, uint64_t seed_base, int patch_size,
                   int threads);
DatasetMeta read_dataset_meta(const std::string& dir);
std::string record_path(const std::string& dir, const std::string& split, int index);

}  // namespace hoi
