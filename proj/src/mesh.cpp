#include "hoi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hoi {

Aabb TriangleMesh::bounds() const {
    Aabb box;
    for (const Vec3& v : vertices) box.expand(v);
    return box;
}

double TriangleMesh::total_area() const {
    double area = 0.0;
    for (const auto& t : triangles) {
        const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        area += 0.5 * e1.cross(e2).norm();
    }
    return area;
}

TriangleMesh TriangleMesh::transformed(const Mat3& r, const Vec3& t) const {
    TriangleMesh out;
    out.vertices.reserve(vertices.size());
    for (const Vec3& v : vertices) out.vertices.push_back(r * v + t);
    out.triangles = triangles;
    return out;
}

bool is_watertight(const TriangleMesh& mesh, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    // Directed edge -> count. Closed orientable: every directed edge appears
    // once and its reverse appears once.
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : mesh.triangles) {
        const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        if (0.5 * e1.cross(e2).norm() <= 1e-12) return fail("degenerate triangle");
        for (int i = 0; i < 3; ++i) {
            const int a = t[i], b = t[(i + 1) % 3];
            if (a == b) return fail("self edge");
            if (++edges[{a, b}] > 1) return fail("duplicated directed edge");
        }
    }
    for (const auto& [e, n] : edges) {
        auto it = edges.find({e.second, e.first});
        if (it == edges.end()) return fail("boundary edge");
    }
    return true;
}

std::vector<double> build_area_cdf(const TriangleMesh& mesh) {
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        acc += 0.5 * e1.cross(e2).norm();
        cdf[i] = acc;
    }
    return cdf;
}

Vec3 sample_surface_point(const TriangleMesh& mesh, const std::vector<double>& area_cdf,
                          Rng& rng, Vec3* normal) {
    const double r = rng.uniform() * area_cdf.back();
    const size_t idx = std::lower_bound(area_cdf.begin(), area_cdf.end(), r) - area_cdf.begin();
    const auto& t = mesh.triangles[std::min(idx, mesh.triangles.size() - 1)];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    if (normal) *normal = (b - a).cross(c - a).normalized();
    return a + u * (b - a) + v * (c - a);
}

TriangleMesh make_box(const Vec3& h) {
    TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                              (i & 4) ? h.z() : -h.z()});
    // Outward-facing winding per face.
    const int faces[6][4] = {{0, 2, 3, 1},   // -z
                             {4, 5, 7, 6},   // +z
                             {0, 1, 5, 4},   // -y
                             {2, 6, 7, 3},   // +y
                             {0, 4, 6, 2},   // -x
                             {1, 3, 7, 5}};  // +x
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

TriangleMesh make_cylinder(double radius, double half_height, int segments) {
    TriangleMesh m;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * M_PI * i / segments;
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), -half_height});
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), half_height});
    }
    const int bot_center = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, -half_height});
    const int top_center = bot_center + 1;
    m.vertices.push_back({0, 0, half_height});
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
        m.triangles.push_back({bot_center, b1, b0});
        m.triangles.push_back({top_center, t0, t1});
    }
    return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh m;
    m.vertices = {{-1, t, 0},  {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                  {0, -1, t},  {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                  {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            m.vertices.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
            const int id = static_cast<int>(m.vertices.size()) - 1;
            midpoint[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.triangles.size() * 4);
        for (const auto& tri : m.triangles) {
            const int ab = mid(tri[0], tri[1]);
            const int bc = mid(tri[1], tri[2]);
            const int ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.triangles = std::move(next);
    }
    for (Vec3& v : m.vertices) v = radius * v.normalized();
    return m;
}

TriangleMesh make_capsule(const Vec3& a, const Vec3& b, double radius, int segments,
                          int rings) {
    // Local frame with z along the bone.
    const Vec3 axis = b - a;
    const double len = axis.norm();
    Vec3 z = len > 1e-12 ? Vec3(axis / len) : Vec3::UnitZ();
    Vec3 x = std::abs(z.z()) < 0.9 ? z.cross(Vec3::UnitZ()).normalized()
                                   : z.cross(Vec3::UnitX()).normalized();
    Vec3 y = z.cross(x);

    TriangleMesh m;
    auto ring = [&](const Vec3& center, double r, double zoff) {
        const int base = static_cast<int>(m.vertices.size());
        for (int i = 0; i < segments; ++i) {
            const double ang = 2.0 * M_PI * i / segments;
            m.vertices.push_back(center + r * std::cos(ang) * x + r * std::sin(ang) * y +
                                 zoff * z);
        }
        return base;
    };
    auto band = [&](int r0, int r1) {
        for (int i = 0; i < segments; ++i) {
            const int j = (i + 1) % segments;
            m.triangles.push_back({r0 + i, r0 + j, r1 + j});
            m.triangles.push_back({r0 + i, r1 + j, r1 + i});
        }
    };

    // Bottom pole, cap rings, two cylinder rings, cap rings, top pole.
    m.vertices.push_back(a - radius * z);
    const int bottom_pole = 0;
    std::vector<int> rows;
    for (int k = 1; k <= rings; ++k) {
        const double phi = 0.5 * M_PI * k / (rings + 1);
        rows.push_back(ring(a, radius * std::sin(phi), -radius * std::cos(phi)));
    }
    rows.push_back(ring(a, radius, 0.0));
    rows.push_back(ring(b, radius, 0.0));
    for (int k = rings; k >= 1; --k) {
        const double phi = 0.5 * M_PI * k / (rings + 1);
        rows.push_back(ring(b, radius * std::sin(phi), radius * std::cos(phi)));
    }
    m.vertices.push_back(b + radius * z);
    const int top_pole = static_cast<int>(m.vertices.size()) - 1;

    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        m.triangles.push_back({bottom_pole, rows[0] + j, rows[0] + i});
    }
    for (size_t r = 0; r + 1 < rows.size(); ++r) band(rows[r], rows[r + 1]);
    const int last = rows.back();
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        m.triangles.push_back({top_pole, last + i, last + j});
    }
    return m;
}

void append_mesh(TriangleMesh& mesh, const TriangleMesh& other) {
    const int off = static_cast<int>(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto& t : other.triangles)
        mesh.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
}

std::string mesh_to_text(const TriangleMesh& mesh,
                         const std::vector<std::vector<std::pair<int, double>>>* weights) {
    std::ostringstream os;
    os.precision(17);
    os << "hoimesh 1\n";
    for (const Vec3& v : mesh.vertices)
        os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (weights) {
        for (const auto& w : *weights) {
            os << "w";
            for (const auto& [joint, value] : w) os << ' ' << joint << ' ' << value;
            os << '\n';
        }
    }
    return os.str();
}

TriangleMesh mesh_from_text(const std::string& text,
                            std::vector<std::vector<std::pair<int, double>>>* weights) {
    std::istringstream is(text);
    std::string header;
    int version = 0;
    is >> header >> version;
    if (header != "hoimesh" || version != 1)
        throw FormatError("mesh_from_text: bad header");
    TriangleMesh m;
    if (weights) weights->clear();
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            ls >> v.x() >> v.y() >> v.z();
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            ls >> t[0] >> t[1] >> t[2];
            m.triangles.push_back(t);
        } else if (tag == "w") {
            std::vector<std::pair<int, double>> w;
            int joint;
            double value;
            while (ls >> joint >> value) w.emplace_back(joint, value);
            if (weights) weights->push_back(std::move(w));
        } else {
            throw FormatError("mesh_from_text: unknown line tag '" + tag + "'");
        }
    }
    return m;
}

}  // namespace hoi
