#include "hoi/evalkit.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "hoi/errors.hpp"
#include "hoi/rng.hpp"

namespace hoi {

namespace {

Vec3 centroid(const std::vector<Vec3>& pts) {
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

double mean_error_mm(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                     const Similarity& align_b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - align_b.apply(b[i])).norm();
    return 1000.0 * acc / static_cast<double>(a.size());
}

std::vector<Vec3> joints_vec(const HandGeometry& g) {
    return {g.joints3d.begin(), g.joints3d.end()};
}

}  // namespace

Similarity procrustes_align(const std::vector<Vec3>& target, const std::vector<Vec3>& source) {
    if (target.size() != source.size() || target.size() < 3)
        throw DegenerateAlignment("procrustes: need >= 3 paired points");
    const size_t n = target.size();
    const Vec3 mu_t = centroid(target), mu_s = centroid(source);

    Mat3 cov = Mat3::Zero();
    double var_s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Vec3 dt = target[i] - mu_t, ds = source[i] - mu_s;
        cov += dt * ds.transpose();
        var_s += ds.squaredNorm();
    }
    cov /= static_cast<double>(n);
    var_s /= static_cast<double>(n);
    if (var_s < 1e-18) throw DegenerateAlignment("procrustes: coincident source points");

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 d = svd.singularValues();
    if (d(1) < 1e-12 * std::max(d(0), 1e-300))
        throw DegenerateAlignment("procrustes: collinear source points");

    Vec3 signs = Vec3::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) signs(2) = -1.0;

    Similarity out;
    out.r = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
    out.s = d.dot(signs) / var_s;
    out.t = mu_t - out.s * (out.r * mu_s);
    return out;
}

Similarity scale_translation_align(const std::vector<Vec3>& target,
                                   const std::vector<Vec3>& source) {
    if (target.size() != source.size() || target.empty())
        throw DegenerateAlignment("scale_translation_align: size mismatch");
    const Vec3 mu_t = centroid(target), mu_s = centroid(source);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        num += (target[i] - mu_t).dot(source[i] - mu_s);
        den += (source[i] - mu_s).squaredNorm();
    }
    Similarity out;
    out.s = den > 1e-18 ? num / den : 1.0;
    out.t = mu_t - out.s * mu_s;
    return out;
}

namespace {

double mean_euclid(const std::vector<Vec3>& target, const std::vector<Vec3>& source,
                   const Similarity& t) {
    double acc = 0.0;
    for (size_t i = 0; i < target.size(); ++i) acc += (target[i] - t.apply(source[i])).norm();
    return acc / static_cast<double>(target.size());
}

// Weighted Umeyama (similarity) and weighted scale+translation solves.
Similarity weighted_similarity(const std::vector<Vec3>& target,
                               const std::vector<Vec3>& source,
                               const std::vector<double>& w, bool with_rotation) {
    double wsum = 0.0;
    Vec3 mu_t = Vec3::Zero(), mu_s = Vec3::Zero();
    for (size_t i = 0; i < target.size(); ++i) {
        wsum += w[i];
        mu_t += w[i] * target[i];
        mu_s += w[i] * source[i];
    }
    mu_t /= wsum;
    mu_s /= wsum;

    Similarity out;
    if (with_rotation) {
        Mat3 cov = Mat3::Zero();
        double var_s = 0.0;
        for (size_t i = 0; i < target.size(); ++i) {
            cov += w[i] * (target[i] - mu_t) * (source[i] - mu_s).transpose();
            var_s += w[i] * (source[i] - mu_s).squaredNorm();
        }
        if (var_s < 1e-18) return out;
        Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Vec3 signs = Vec3::Ones();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) signs(2) = -1.0;
        out.r = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
        out.s = svd.singularValues().dot(signs) / var_s;
    } else {
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < target.size(); ++i) {
            num += w[i] * (target[i] - mu_t).dot(source[i] - mu_s);
            den += w[i] * (source[i] - mu_s).squaredNorm();
        }
        out.s = den > 1e-18 ? num / den : 1.0;
    }
    out.t = mu_t - out.s * (out.r * mu_s);
    return out;
}

// Majorize-minimize polish of the mean Euclidean error over the alignment
// class. Each weighted least-squares solve with w_i = 1/r_i majorizes the
// mean-L2 objective, so the error never increases; starting one run from the
// next-smaller class's result makes PAMJE <= STMJE <= MJE exact.
Similarity irls_align(const std::vector<Vec3>& target, const std::vector<Vec3>& source,
                      const std::vector<Similarity>& inits, bool with_rotation) {
    Similarity best;
    double best_err = std::numeric_limits<double>::max();
    for (const Similarity& init : inits) {
        Similarity cur = init;
        double err = mean_euclid(target, source, cur);
        for (int iter = 0; iter < 60; ++iter) {
            std::vector<double> w(target.size());
            for (size_t i = 0; i < target.size(); ++i)
                w[i] = 1.0 / std::max((target[i] - cur.apply(source[i])).norm(), 1e-12);
            const Similarity next = weighted_similarity(target, source, w, with_rotation);
            const double next_err = mean_euclid(target, source, next);
            if (next_err >= err - 1e-16) break;
            cur = next;
            err = next_err;
        }
        if (err < best_err) {
            best_err = err;
            best = cur;
        }
    }
    return best;
}

struct AlignedErrors {
    Similarity st, pa;
};

// Identity -> scale+translation -> similarity, each polished on the reported
// functional and seeded from the previous class so the hierarchy holds.
AlignedErrors hierarchy_align(const std::vector<Vec3>& target,
                              const std::vector<Vec3>& source) {
    AlignedErrors out;
    out.st = irls_align(target, source,
                        {scale_translation_align(target, source), Similarity{}},
                        /*with_rotation=*/false);
    std::vector<Similarity> inits = {out.st};
    try {
        inits.push_back(procrustes_align(target, source));
    } catch (const DegenerateAlignment&) {
        // fall back to the smaller-class result alone
    }
    out.pa = irls_align(target, source, inits, /*with_rotation=*/true);
    return out;
}

// Fraction of `from` points whose nearest neighbour in `to` is within tau.
double nn_within(const std::vector<Vec3>& from, const std::vector<Vec3>& to, double tau) {
    int hits = 0;
    for (const Vec3& p : from) {
        double best = std::numeric_limits<double>::max();
        for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
        hits += std::sqrt(best) <= tau;
    }
    return static_cast<double>(hits) / from.size();
}

double fscore(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt, double tau_mm) {
    const double tau = tau_mm / 1000.0;
    const double precision = nn_within(pred, gt, tau);
    const double recall = nn_within(gt, pred, tau);
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double vauc(const std::vector<double>& errors_mm) {
    // Trapezoidal mean of the percentage-of-correct-vertices curve.
    double acc = 0.0;
    double prev = 0.0;
    for (int i = 0; i < kVaucSteps; ++i) {
        const double tau = kVaucMaxMm * i / (kVaucSteps - 1);
        int ok = 0;
        for (double e : errors_mm) ok += e <= tau;
        const double pcv = static_cast<double>(ok) / errors_mm.size();
        if (i > 0) acc += 0.5 * (prev + pcv);
        prev = pcv;
    }
    return acc / (kVaucSteps - 1);
}

std::vector<double> errors_mm(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                              const Similarity& align_pred) {
    std::vector<double> out(pred.size());
    for (size_t i = 0; i < pred.size(); ++i)
        out[i] = 1000.0 * (align_pred.apply(pred[i]) - gt[i]).norm();
    return out;
}

std::vector<Vec3> apply_all(const std::vector<Vec3>& pts, const Similarity& t) {
    std::vector<Vec3> out(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) out[i] = t.apply(pts[i]);
    return out;
}

}  // namespace

HandMetrics hand_metrics(const HandGeometry& pred, const HandGeometry& gt) {
    const std::vector<Vec3> pj = joints_vec(pred), gj = joints_vec(gt);
    const Similarity identity;

    HandMetrics m;
    m.mje = mean_error_mm(gj, pj, identity);
    const AlignedErrors joints_align = hierarchy_align(gj, pj);
    m.stmje = mean_error_mm(gj, pj, joints_align.st);
    m.pamje = mean_error_mm(gj, pj, joints_align.pa);

    const std::vector<Vec3>& pv = pred.verts3d;
    const std::vector<Vec3>& gv = gt.verts3d;
    m.mme = mean_error_mm(gv, pv, identity);
    const Similarity pa_verts = hierarchy_align(gv, pv).pa;
    m.pamme = mean_error_mm(gv, pv, pa_verts);

    m.vauc = vauc(errors_mm(pv, gv, identity));
    m.pavauc = vauc(errors_mm(pv, gv, pa_verts));
    m.f5 = fscore(pv, gv, 5.0);
    m.f15 = fscore(pv, gv, 15.0);
    const std::vector<Vec3> pv_aligned = apply_all(pv, pa_verts);
    m.paf5 = fscore(pv_aligned, gv, 5.0);
    m.paf15 = fscore(pv_aligned, gv, 15.0);
    return m;
}

ObjectMetrics object_metrics(const ObjectPose& pred, const ObjectPose& gt,
                             const TriangleMesh& model, int adds_points, uint64_t seed) {
    const Mat3 rp = rot6d_to_matrix(pred.rotation);
    const Mat3 rg = rot6d_to_matrix(gt.rotation);

    ObjectMetrics m;
    m.oce = 1000.0 * (pred.translation - gt.translation).norm();

    const Aabb box = model.bounds();
    double corner_acc = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Vec3 corner((i & 1) ? box.hi.x() : box.lo.x(), (i & 2) ? box.hi.y() : box.lo.y(),
                          (i & 4) ? box.hi.z() : box.lo.z());
        corner_acc += (rp * corner + pred.translation - (rg * corner + gt.translation)).norm();
    }
    m.mce = 1000.0 * corner_acc / 8.0;

    double vert_acc = 0.0;
    for (const Vec3& v : model.vertices)
        vert_acc += (rp * v + pred.translation - (rg * v + gt.translation)).norm();
    m.ome = 1000.0 * vert_acc / static_cast<double>(model.vertices.size());

    // ADD-S over area-weighted surface samples: for each gt-posed point, the
    // distance to the nearest pred-posed point.
    Rng rng(seed);
    const std::vector<double> cdf = build_area_cdf(model);
    std::vector<Vec3> samples(adds_points);
    for (Vec3& s : samples) s = sample_surface_point(model, cdf, rng);
    std::vector<Vec3> pred_pts(adds_points), gt_pts(adds_points);
    for (int i = 0; i < adds_points; ++i) {
        pred_pts[i] = rp * samples[i] + pred.translation;
        gt_pts[i] = rg * samples[i] + gt.translation;
    }
    double adds_acc = 0.0;
    for (const Vec3& g : gt_pts) {
        double best = std::numeric_limits<double>::max();
        for (const Vec3& p : pred_pts) best = std::min(best, (g - p).squaredNorm());
        adds_acc += std::sqrt(best);
    }
    m.adds = 1000.0 * adds_acc / adds_points;
    return m;
}

}  // namespace hoi
