#include "hoi/synthscene.hpp"

#include <Eigen/Geometry>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hoi/errors.hpp"
#include "hoi/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "record format is little-endian; big-endian hosts need byte swaps");

namespace hoi {

void SceneConfig::validate() const {
    if (image_size <= 0 || sdf_samples <= 0) throw InvalidConfig("scene: sizes must be positive");
    if (hand_z_min <= 0.0 || hand_z_min > hand_z_max || object_z_min <= 0.0 ||
        object_z_min > object_z_max)
        throw InvalidConfig("scene: bad depth ranges");
}

TriangleMesh make_object_mesh(ObjectShape shape, const Vec3& dims) {
    switch (shape) {
        case ObjectShape::box: return make_box(dims);
        case ObjectShape::cylinder: return make_cylinder(dims.x(), dims.y());
        case ObjectShape::sphere: return make_icosphere(dims.x());
    }
    throw InvalidConfig("make_object_mesh: unknown shape");
}

RasterOutput rasterize(const TriangleMesh& hand_mesh, const TriangleMesh& obj_mesh,
                       const CameraIntrinsics& k, int size) {
    RasterOutput out;
    out.image = Image::filled(size, size, 22, 26, 31);
    out.seg.assign(static_cast<size_t>(size) * size, 0);
    out.depth.assign(static_cast<size_t>(size) * size, std::numeric_limits<float>::max());

    const Vec3 light = Vec3(0.3, -0.5, -0.8).normalized();
    struct Entry {
        const TriangleMesh* mesh;
        uint8_t id;
        uint8_t color[3];
    };
    const Entry entries[2] = {{&hand_mesh, 1, {205, 168, 148}}, {&obj_mesh, 2, {92, 130, 200}}};

    for (const Entry& e : entries) {
        for (const auto& tri : e.mesh->triangles) {
            const Vec3 p3[3] = {e.mesh->vertices[tri[0]], e.mesh->vertices[tri[1]],
                                e.mesh->vertices[tri[2]]};
            if (p3[0].z() <= 1e-6 || p3[1].z() <= 1e-6 || p3[2].z() <= 1e-6) continue;
            Vec2 p[3];
            for (int i = 0; i < 3; ++i)
                p[i] = Vec2(k.fx * p3[i].x() / p3[i].z() + k.cx,
                            k.fy * p3[i].y() / p3[i].z() + k.cy);

            auto edge = [](const Vec2& a, const Vec2& b, double px, double py) {
                return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
            };
            const double area = edge(p[0], p[1], p[2].x(), p[2].y());
            if (std::abs(area) < 1e-12) continue;

            const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].x(), p[1].x(), p[2].x()}))));
            const int x1 = std::min(size - 1, static_cast<int>(std::floor(std::max({p[0].x(), p[1].x(), p[2].x()}))));
            const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].y(), p[1].y(), p[2].y()}))));
            const int y1 = std::min(size - 1, static_cast<int>(std::floor(std::max({p[0].y(), p[1].y(), p[2].y()}))));
            if (x0 > x1 || y0 > y1) continue;

            const Vec3 n = (p3[1] - p3[0]).cross(p3[2] - p3[0]).normalized();
            const double shade = 0.35 + 0.65 * std::abs(n.dot(light));
            uint8_t color[3];
            for (int c = 0; c < 3; ++c)
                color[c] = static_cast<uint8_t>(std::min(255.0, e.color[c] * shade));

            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double w0 = edge(p[1], p[2], x, y) / area;
                    const double w1 = edge(p[2], p[0], x, y) / area;
                    const double w2 = edge(p[0], p[1], x, y) / area;
                    if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                    const double inv_z = w0 / p3[0].z() + w1 / p3[1].z() + w2 / p3[2].z();
                    const float z = static_cast<float>(1.0 / inv_z);
                    const size_t i = static_cast<size_t>(y) * size + x;
                    if (z >= out.depth[i]) continue;
                    out.depth[i] = z;
                    out.seg[i] = e.id;
                    std::memcpy(out.image.pixel(x, y), color, 3);
                }
            }
        }
    }
    return out;
}

namespace {

Mat3 random_rotation(Rng& rng) {
    // Shoemake's uniform quaternion sampling.
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const Eigen::Quaterniond quat(b * std::cos(2.0 * M_PI * u3),
                                  a * std::sin(2.0 * M_PI * u2),
                                  a * std::cos(2.0 * M_PI * u2),
                                  b * std::sin(2.0 * M_PI * u3));
    return quat.toRotationMatrix();
}

Mat3 rot_x(double t) {
    Mat3 m;
    m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
    return m;
}

Mat3 rot_z(double t) {
    Mat3 m;
    m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
    return m;
}

}  // namespace

SceneRecord sample_scene(uint64_t seed, const SceneConfig& cfg, const HandSkeleton& skel) {
    cfg.validate();
    Rng rng(mix_seed(seed, 0x5cee));

    SceneRecord rec;
    rec.seed = seed;
    rec.image_size = cfg.image_size;
    rec.camera = cfg.camera();

    // Hand pose.
    rec.hand_params.rotations[0] = matrix_to_rot6d(random_rotation(rng));
    const double flex_range = cfg.flexion_range_deg * M_PI / 180.0;
    const double abd_range = cfg.abduction_range_deg * M_PI / 180.0;
    for (int f = 0; f < kHandFingers; ++f) {
        for (int l = 0; l < 3; ++l) {
            const double flex = rng.uniform(-flex_range, flex_range);
            Mat3 local = rot_x(flex);
            if (l == 0) local = local * rot_z(rng.uniform(-abd_range, abd_range));
            rec.hand_params.rotations[1 + 3 * f + l] = matrix_to_rot6d(local);
        }
    }
    for (int i = 0; i < kHandShapeDim; ++i)
        rec.hand_params.beta[i] = rng.uniform(-cfg.beta_range, cfg.beta_range);
    rec.hand_params.root_translation =
        Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
             rng.uniform(cfg.hand_z_min, cfg.hand_z_max));

    const HandGeometry geom = forward_kinematics(skel, rec.hand_params);

    // Object: a primitive placed near the palm.
    rec.object_shape = static_cast<ObjectShape>(rng.uniform_int(3));
    switch (rec.object_shape) {
        case ObjectShape::box:
            rec.object_dims = Vec3(rng.uniform(0.015, 0.04), rng.uniform(0.015, 0.04),
                                   rng.uniform(0.015, 0.04));
            break;
        case ObjectShape::cylinder:
            rec.object_dims = Vec3(rng.uniform(0.015, 0.035), rng.uniform(0.03, 0.06), 0.0);
            break;
        case ObjectShape::sphere:
            rec.object_dims = Vec3(rng.uniform(0.02, 0.04), 0.0, 0.0);
            break;
    }
    rec.object_pose.rotation = matrix_to_rot6d(random_rotation(rng));
    const Vec3 palm = geom.joints3d[finger_joint(2, 0)];  // middle-finger base
    Vec3 t_o = palm + Vec3(rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03),
                           rng.uniform(-0.03, 0.03));
    t_o.z() = std::clamp(t_o.z(), cfg.object_z_min, cfg.object_z_max);
    rec.object_pose.translation = t_o;

    // Derived observations.
    const TriangleMesh hand_mesh{geom.verts3d, skel.template_mesh.triangles};
    const TriangleMesh obj_mesh = posed_object_mesh(rec);
    RasterOutput raster = rasterize(hand_mesh, obj_mesh, rec.camera, cfg.image_size);
    rec.image = std::move(raster.image.rgb);
    rec.seg = std::move(raster.seg);
    rec.keypoints2d = keypoints_2d(geom, rec.camera);
    rec.sdf_samples =
        sample_queries(hand_mesh, obj_mesh, cfg.sdf_samples, mix_seed(seed, 0x5df));
    return rec;
}

TriangleMesh posed_hand_mesh(const SceneRecord& rec, const HandSkeleton& skel) {
    const HandGeometry geom = forward_kinematics(skel, rec.hand_params);
    return {geom.verts3d, skel.template_mesh.triangles};
}

TriangleMesh posed_object_mesh(const SceneRecord& rec) {
    return make_object_mesh(rec.object_shape, rec.object_dims)
        .transformed(rot6d_to_matrix(rec.object_pose.rotation), rec.object_pose.translation);
}

void scene_normalization(const SceneRecord& rec, const HandSkeleton& skel, Vec3* center,
                         double* half_extent) {
    Aabb box = posed_hand_mesh(rec, skel).bounds();
    box.expand(posed_object_mesh(rec).bounds());
    box = box.inflated(kQueryBoxInflation);
    *center = box.center();
    *half_extent = 0.5 * box.extent().maxCoeff();
}

namespace {

constexpr char kMagic[8] = {'H', 'O', 'I', 'S', 'C', 'N', '0', '1'};
constexpr uint32_t kRecordVersion = 1;

struct Writer {
    std::vector<char> buf;
    void bytes(const void* p, size_t n) {
        const char* c = static_cast<const char*>(p);
        buf.insert(buf.end(), c, c + n);
    }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void vec3(const Vec3& v) {
        f64(v.x());
        f64(v.y());
        f64(v.z());
    }
    void rot6(const Rotation6D& r) {
        vec3(r.a);
        vec3(r.b);
    }
};

struct Reader {
    const char* p;
    size_t n, off = 0;
    void bytes(void* out, size_t count) {
        if (off + count > n) throw FormatError("record truncated");
        std::memcpy(out, p + off, count);
        off += count;
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    Vec3 vec3() {
        const double x = f64(), y = f64(), z = f64();
        return {x, y, z};
    }
    Rotation6D rot6() {
        Rotation6D r;
        r.a = vec3();
        r.b = vec3();
        return r;
    }
};

}  // namespace

void write_record(const SceneRecord& rec, const std::string& path) {
    Writer w;
    w.bytes(kMagic, 8);
    w.u32(kRecordVersion);
    w.u64(rec.seed);
    w.u32(static_cast<uint32_t>(rec.image_size));
    w.f64(rec.camera.fx);
    w.f64(rec.camera.fy);
    w.f64(rec.camera.cx);
    w.f64(rec.camera.cy);
    for (const Rotation6D& r : rec.hand_params.rotations) w.rot6(r);
    for (int i = 0; i < kHandShapeDim; ++i) w.f64(rec.hand_params.beta[i]);
    w.vec3(rec.hand_params.root_translation);
    w.u32(static_cast<uint32_t>(rec.object_shape));
    w.vec3(rec.object_dims);
    w.rot6(rec.object_pose.rotation);
    w.vec3(rec.object_pose.translation);
    w.bytes(rec.image.data(), rec.image.size());
    w.bytes(rec.seg.data(), rec.seg.size());
    for (const Vec2& kp : rec.keypoints2d) {
        w.f64(kp.x());
        w.f64(kp.y());
    }
    w.u32(static_cast<uint32_t>(rec.sdf_samples.size()));
    for (const SdfSample& s : rec.sdf_samples) {
        w.vec3(s.p);
        w.f64(s.d_hand);
        w.f64(s.d_obj);
        const uint8_t near = s.near_surface ? 1 : 0;
        w.bytes(&near, 1);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_record: cannot open " + path);
    f.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw IoError("write_record: short write to " + path);
}

SceneRecord read_record(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_record: cannot open " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
    Reader r{data.data(), data.size()};

    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("record: bad magic");
    const uint32_t version = r.u32();
    if (version != kRecordVersion)
        throw FormatError("record: unsupported version " + std::to_string(version) +
                          " (expected " + std::to_string(kRecordVersion) + ")");

    SceneRecord rec;
    rec.seed = r.u64();
    rec.image_size = static_cast<int>(r.u32());
    rec.camera.fx = r.f64();
    rec.camera.fy = r.f64();
    rec.camera.cx = r.f64();
    rec.camera.cy = r.f64();
    for (Rotation6D& rot : rec.hand_params.rotations) rot = r.rot6();
    for (int i = 0; i < kHandShapeDim; ++i) rec.hand_params.beta[i] = r.f64();
    rec.hand_params.root_translation = r.vec3();
    rec.object_shape = static_cast<ObjectShape>(r.u32());
    rec.object_dims = r.vec3();
    rec.object_pose.rotation = r.rot6();
    rec.object_pose.translation = r.vec3();
    const size_t pixels = static_cast<size_t>(rec.image_size) * rec.image_size;
    rec.image.resize(pixels * 3);
    r.bytes(rec.image.data(), rec.image.size());
    rec.seg.resize(pixels);
    r.bytes(rec.seg.data(), rec.seg.size());
    for (Vec2& kp : rec.keypoints2d) {
        kp.x() = r.f64();
        kp.y() = r.f64();
    }
    rec.sdf_samples.resize(r.u32());
    for (SdfSample& s : rec.sdf_samples) {
        s.p = r.vec3();
        s.d_hand = r.f64();
        s.d_obj = r.f64();
        uint8_t near;
        r.bytes(&near, 1);
        s.near_surface = near != 0;
    }
    if (r.off != r.n) throw FormatError("record: trailing bytes");
    return rec;
}

std::string record_path(const std::string& dir, const std::string& split, int index) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05d.bin", index);
    return dir + "/" + split + "/" + name;
}

void write_dataset(const std::string& dir, const SceneConfig& cfg, const HandSkeleton& skel,
                   int train_scenes, int test_scenes, uint64_t seed_base, int patch_size,
                   int threads) {
    namespace fs = std::filesystem;
    fs::create_directories(dir + "/train");
    fs::create_directories(dir + "/test");

    auto generate_split = [&](const std::string& split, int count, uint64_t split_id) {
        const int workers = std::max(1, threads);
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (int i = w; i < count; i += workers) {
                    const SceneRecord rec =
                        sample_scene(mix_seed(seed_base, split_id, i), cfg, skel);
                    write_record(rec, record_path(dir, split, i));
                    Image im;
                    im.width = im.height = rec.image_size;
                    im.rgb = rec.image;
                    std::string ppm = record_path(dir, split, i);
                    ppm.replace(ppm.size() - 4, 4, ".ppm");
                    write_ppm(im, ppm);
                }
            });
        }
        for (auto& t : pool) t.join();
    };
    generate_split("train", train_scenes, 0);
    generate_split("test", test_scenes, 1);

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["image_size"] = cfg.image_size;
    meta["patch_size"] = patch_size;
    meta["sdf_samples"] = cfg.sdf_samples;
    meta["seed_base"] = seed_base;
    meta["splits"]["train"] = train_scenes;
    meta["splits"]["test"] = test_scenes;
    std::ofstream f(dir + "/meta.json");
    if (!f) throw IoError("write_dataset: cannot write manifest");
    f << meta.dump(2) << '\n';
}

DatasetMeta read_dataset_meta(const std::string& dir) {
    std::ifstream f(dir + "/meta.json");
    if (!f) throw IoError("dataset manifest not found in " + dir);
    nlohmann::json meta = nlohmann::json::parse(f);
    DatasetMeta m;
    m.format_version = meta.at("format_version").get<int>();
    if (m.format_version != 1)
        throw FormatError("dataset: unsupported format_version " +
                          std::to_string(m.format_version));
    m.image_size = meta.at("image_size").get<int>();
    m.patch_size = meta.at("patch_size").get<int>();
    m.sdf_samples = meta.at("sdf_samples").get<int>();
    m.seed_base = meta.at("seed_base").get<uint64_t>();
    m.train_scenes = meta.at("splits").at("train").get<int>();
    m.test_scenes = meta.at("splits").at("test").get<int>();
    return m;
}

}  // namespace hoi
