#include "hoi/hand.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hoi/errors.hpp"

namespace hoi {

void HandSkeleton::finalize() {
    rest_joints[0] = template_offsets[0];
    for (int j = 1; j < kHandJoints; ++j)
        rest_joints[j] = rest_joints[parent[j]] + template_offsets[j];

    vertex_offsets.assign(vertex_weights.size(), {});
    for (size_t v = 0; v < vertex_weights.size(); ++v) {
        vertex_offsets[v].reserve(vertex_weights[v].size());
        for (const auto& [joint, w] : vertex_weights[v])
            vertex_offsets[v].push_back(template_mesh.vertices[v] - rest_joints[joint]);
    }
}

namespace {

double bone_scale(const HandSkeleton& skel, const HandParams& params, int j) {
    double s = 1.0;
    for (int g : skel.shape_groups[j]) s += params.beta[g];
    return s;
}

struct FingerSpec {
    Vec3 base;
    Vec3 seg[3];
    double radius[4];  // palm bone + three segments
};

}  // namespace

HandSkeleton make_template_hand() {
    HandSkeleton skel;
    skel.parent[0] = -1;
    skel.template_offsets[0] = Vec3::Zero();  // wrist anchors the hand frame

    // Rest pose: flat right hand, fingers along +y, palm facing -z,
    // thumb toward +x. Lengths in meters.
    const FingerSpec fingers[kHandFingers] = {
        // thumb
        {{0.033, 0.020, 0.0},
         {{0.022, 0.022, 0.0}, {0.017, 0.020, 0.0}, {0.012, 0.016, 0.0}},
         {0.011, 0.009, 0.008, 0.007}},
        // index
        {{0.021, 0.092, 0.0},
         {{0.002, 0.042, 0.0}, {0.001, 0.026, 0.0}, {0.000, 0.021, 0.0}},
         {0.010, 0.008, 0.007, 0.006}},
        // middle
        {{0.000, 0.096, 0.0},
         {{0.000, 0.046, 0.0}, {0.000, 0.029, 0.0}, {0.000, 0.022, 0.0}},
         {0.010, 0.008, 0.007, 0.006}},
        // ring
        {{-0.020, 0.090, 0.0},
         {{-0.002, 0.042, 0.0}, {-0.001, 0.027, 0.0}, {0.000, 0.021, 0.0}},
         {0.010, 0.008, 0.007, 0.006}},
        // pinky
        {{-0.038, 0.082, 0.0},
         {{-0.003, 0.032, 0.0}, {-0.002, 0.021, 0.0}, {0.000, 0.017, 0.0}},
         {0.009, 0.007, 0.006, 0.006}},
    };

    for (int f = 0; f < kHandFingers; ++f) {
        for (int l = 0; l < 4; ++l) {
            const int j = finger_joint(f, l);
            skel.parent[j] = l == 0 ? 0 : finger_joint(f, l - 1);
            skel.template_offsets[j] = l == 0 ? fingers[f].base : fingers[f].seg[l - 1];
            skel.shape_groups[j] = {0, 1 + f, l == 0 ? 6 : 6 + l};
        }
    }

    // Temporary rest joints for mesh placement.
    std::array<Vec3, kHandJoints> rest;
    rest[0] = Vec3::Zero();
    for (int j = 1; j < kHandJoints; ++j)
        rest[j] = rest[skel.parent[j]] + skel.template_offsets[j];

    // One capsule per bone, all of its vertices bound to the proximal joint.
    for (int f = 0; f < kHandFingers; ++f) {
        for (int l = 0; l < 4; ++l) {
            const int j = finger_joint(f, l);
            const int p = skel.parent[j];
            const TriangleMesh capsule =
                make_capsule(rest[p], rest[j], fingers[f].radius[l]);
            append_mesh(skel.template_mesh, capsule);
            for (size_t v = 0; v < capsule.vertices.size(); ++v)
                skel.vertex_weights.push_back({{p, 1.0}});
        }
    }

    skel.finalize();
    return skel;
}

HandSkeleton load_template_hand(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_template_hand: cannot open " + path);

    HandSkeleton skel;
    std::string line;
    int joints_expected = -1, joints_read = 0;
    std::string mesh_text;
    bool in_mesh = false;
    while (std::getline(f, line)) {
        if (in_mesh) {
            mesh_text += line;
            mesh_text += '\n';
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "skeleton") {
            ls >> joints_expected;
            if (joints_expected != kHandJoints)
                throw FormatError("hand template: expected 21 joints");
        } else if (tag == "j") {
            int idx, parent;
            Vec3 offset;
            ls >> idx >> parent >> offset.x() >> offset.y() >> offset.z();
            if (idx < 0 || idx >= kHandJoints)
                throw FormatError("hand template: joint index out of range");
            skel.parent[idx] = parent;
            skel.template_offsets[idx] = offset;
            int group;
            while (ls >> group) skel.shape_groups[idx].push_back(group);
            ++joints_read;
        } else if (tag == "hoimesh") {
            in_mesh = true;
            mesh_text = line + '\n';
        } else {
            throw FormatError("hand template: unknown line tag '" + tag + "'");
        }
    }
    if (joints_read != kHandJoints || !in_mesh)
        throw FormatError("hand template: incomplete file");
    skel.template_mesh = mesh_from_text(mesh_text, &skel.vertex_weights);
    skel.finalize();
    return skel;
}

HandGeometry forward_kinematics(const HandSkeleton& skel, const HandParams& params) {
    std::array<Mat3, kHandJoints> rot_w;
    std::array<Vec3, kHandJoints> trans_w;

    rot_w[0] = rot6d_to_matrix(params.rotations[0]);
    trans_w[0] = params.root_translation + skel.template_offsets[0];
    for (int j = 1; j < kHandJoints; ++j) {
        const int p = skel.parent[j];
        const Vec3 offset = bone_scale(skel, params, j) * skel.template_offsets[j];
        trans_w[j] = rot_w[p] * offset + trans_w[p];
        const int r = joint_rotation_index(j);
        rot_w[j] = r >= 0 ? Mat3(rot_w[p] * rot6d_to_matrix(params.rotations[r])) : rot_w[p];
    }

    HandGeometry geom;
    geom.joints3d = trans_w;
    geom.verts3d.resize(skel.vertex_weights.size());
    for (size_t v = 0; v < skel.vertex_weights.size(); ++v) {
        Vec3 out = Vec3::Zero();
        for (size_t k = 0; k < skel.vertex_weights[v].size(); ++k) {
            const auto& [joint, w] = skel.vertex_weights[v][k];
            out += w * (rot_w[joint] * skel.vertex_offsets[v][k] + trans_w[joint]);
        }
        geom.verts3d[v] = out;
    }
    return geom;
}

void rot6d_backward(const Rotation6D& r, const Mat3& d_m, Vec3* d_a, Vec3* d_b) {
    const double n1 = r.a.norm();
    const Vec3 c1 = r.a / n1;
    const double d = c1.dot(r.b);
    const Vec3 u = r.b - d * c1;
    const double n2 = u.norm();
    const Vec3 c2 = u / n2;

    const Vec3 g1 = d_m.col(0), g2 = d_m.col(1), g3 = d_m.col(2);
    Vec3 g_c1 = g1 + c2.cross(g3);            // c3 = c1 x c2
    const Vec3 g_c2 = g2 + g3.cross(c1);
    const Vec3 g_u = (g_c2 - c2.dot(g_c2) * c2) / n2;
    Vec3 g_b = g_u;
    const double g_d = -c1.dot(g_u);
    g_c1 += -d * g_u + g_d * r.b;
    g_b += g_d * c1;
    const Vec3 g_a = (g_c1 - c1.dot(g_c1) * c1) / n1;

    *d_a += g_a;
    *d_b += g_b;
}

HandParamsGrad fk_gradients(const HandSkeleton& skel, const HandParams& params,
                            const std::array<Vec3, kHandJoints>& d_joints,
                            const std::vector<Vec3>& d_verts) {
    // Recompute the forward state.
    std::array<Mat3, kHandJoints> rot_w, rot_l;
    std::array<Vec3, kHandJoints> trans_w;
    rot_l[0] = rot6d_to_matrix(params.rotations[0]);
    rot_w[0] = rot_l[0];
    trans_w[0] = params.root_translation + skel.template_offsets[0];
    for (int j = 1; j < kHandJoints; ++j) {
        const int p = skel.parent[j];
        const int r = joint_rotation_index(j);
        rot_l[j] = r >= 0 ? rot6d_to_matrix(params.rotations[r]) : Mat3::Identity();
        rot_w[j] = rot_w[p] * rot_l[j];
        trans_w[j] = rot_w[p] * (bone_scale(skel, params, j) * skel.template_offsets[j]) +
                     trans_w[p];
    }

    std::array<Mat3, kHandJoints> d_rot_w;
    std::array<Vec3, kHandJoints> d_trans_w;
    d_rot_w.fill(Mat3::Zero());
    d_trans_w.fill(Vec3::Zero());

    if (!d_verts.empty()) {
        for (size_t v = 0; v < skel.vertex_weights.size(); ++v) {
            const Vec3& g = d_verts[v];
            if (g.isZero()) continue;
            for (size_t k = 0; k < skel.vertex_weights[v].size(); ++k) {
                const auto& [joint, w] = skel.vertex_weights[v][k];
                d_rot_w[joint] += (w * g) * skel.vertex_offsets[v][k].transpose();
                d_trans_w[joint] += w * g;
            }
        }
    }
    for (int j = 0; j < kHandJoints; ++j) d_trans_w[j] += d_joints[j];

    HandParamsGrad grad;
    for (auto& g : grad.rotations) g.setZero();
    grad.beta.setZero();
    grad.root_translation.setZero();

    // Children have larger indices, so a simple reverse sweep is leaf-to-root.
    for (int j = kHandJoints - 1; j >= 1; --j) {
        const int p = skel.parent[j];
        const double scale = bone_scale(skel, params, j);
        const Vec3 offset = scale * skel.template_offsets[j];

        d_rot_w[p] += d_rot_w[j] * rot_l[j].transpose() + d_trans_w[j] * offset.transpose();
        d_trans_w[p] += d_trans_w[j];

        const Vec3 d_offset = rot_w[p].transpose() * d_trans_w[j];
        const double d_scale = d_offset.dot(skel.template_offsets[j]);
        for (int g : skel.shape_groups[j]) grad.beta[g] += d_scale;

        const int r = joint_rotation_index(j);
        if (r >= 0) {
            const Mat3 d_local = rot_w[p].transpose() * d_rot_w[j];
            Vec3 d_a = Vec3::Zero(), d_b = Vec3::Zero();
            rot6d_backward(params.rotations[r], d_local, &d_a, &d_b);
            grad.rotations[r].head<3>() += d_a;
            grad.rotations[r].tail<3>() += d_b;
        }
    }

    grad.root_translation = d_trans_w[0];
    Vec3 d_a = Vec3::Zero(), d_b = Vec3::Zero();
    rot6d_backward(params.rotations[0], d_rot_w[0], &d_a, &d_b);
    grad.rotations[0].head<3>() += d_a;
    grad.rotations[0].tail<3>() += d_b;
    return grad;
}

std::array<Vec2, kHandJoints> keypoints_2d(const HandGeometry& geom,
                                           const CameraIntrinsics& k) {
    std::array<Vec2, kHandJoints> out;
    for (int j = 0; j < kHandJoints; ++j) out[j] = project_point(geom.joints3d[j], k);
    return out;
}

}  // namespace hoi
