#include "hoi/masking.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hoi/errors.hpp"
#include "hoi/hand.hpp"
#include "hoi/rng.hpp"

namespace hoi {

const char* mask_pattern_name(MaskPattern p) {
    switch (p) {
        case MaskPattern::random: return "random";
        case MaskPattern::single_finger: return "single_finger";
        case MaskPattern::all_fingertips: return "all_fingertips";
        case MaskPattern::skeleton_random: return "skeleton_random";
    }
    return "?";
}

PatchGrid patchify(const Image& image, int patch_size,
                   std::vector<std::vector<uint8_t>>* blocks) {
    if (patch_size <= 0 || image.width % patch_size != 0 || image.height % patch_size != 0)
        throw InvalidGeometry("patchify: image dimensions not divisible by patch size");
    PatchGrid grid;
    grid.image_size = image.width;
    grid.patch_size = patch_size;
    grid.rows = image.height / patch_size;
    grid.cols = image.width / patch_size;
    if (blocks) {
        blocks->assign(grid.patch_count(), {});
        for (int r = 0; r < grid.rows; ++r) {
            for (int c = 0; c < grid.cols; ++c) {
                auto& block = (*blocks)[r * grid.cols + c];
                block.reserve(static_cast<size_t>(patch_size) * patch_size * 3);
                for (int y = 0; y < patch_size; ++y) {
                    const uint8_t* row = image.pixel(c * patch_size, r * patch_size + y);
                    block.insert(block.end(), row, row + patch_size * 3);
                }
            }
        }
    }
    return grid;
}

Image reassemble_patches(const PatchGrid& grid,
                         const std::vector<std::vector<uint8_t>>& blocks) {
    Image out = Image::filled(grid.cols * grid.patch_size, grid.rows * grid.patch_size, 0, 0, 0);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const auto& block = blocks[r * grid.cols + c];
            for (int y = 0; y < grid.patch_size; ++y) {
                uint8_t* row = out.pixel(c * grid.patch_size, r * grid.patch_size + y);
                std::copy_n(&block[static_cast<size_t>(y) * grid.patch_size * 3],
                            grid.patch_size * 3, row);
            }
        }
    }
    return out;
}

RegionLabels classify_patches(const PatchGrid& grid, const std::vector<uint8_t>& hand_mask,
                              const std::vector<uint8_t>& obj_mask) {
    const size_t pixels = static_cast<size_t>(grid.image_size) * grid.image_size;
    if (hand_mask.size() != pixels || obj_mask.size() != pixels)
        throw InvalidGeometry("classify_patches: mask resolution mismatch");
    RegionLabels out;
    out.label.assign(grid.patch_count(), Region::background);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            bool has_hand = false, has_obj = false;
            for (int y = r * grid.patch_size; y < (r + 1) * grid.patch_size; ++y) {
                for (int x = c * grid.patch_size; x < (c + 1) * grid.patch_size; ++x) {
                    const size_t i = static_cast<size_t>(y) * grid.image_size + x;
                    has_hand |= hand_mask[i] != 0;
                    has_obj |= obj_mask[i] != 0;
                }
            }
            out.label[r * grid.cols + c] =
                has_hand ? Region::hand : (has_obj ? Region::object : Region::background);
        }
    }
    return out;
}

static int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

KeepQuotas allocate_keep_counts(const RegionLabels& labels, const MaskRates& rates) {
    for (double r : {rates.hand, rates.object, rates.background})
        if (!(r >= 0.0 && r <= 1.0)) throw InvalidConfig("mask rate outside [0,1]");

    const int n_hand = labels.count(Region::hand);
    const int n_obj = labels.count(Region::object);
    const int n_bg = labels.count(Region::background);
    const double raw_hand = n_hand * (1.0 - rates.hand);
    const double raw_obj = n_obj * (1.0 - rates.object);
    const double raw_bg = n_bg * (1.0 - rates.background);

    KeepQuotas q;
    q.hand = round_half_up(raw_hand);
    q.object = round_half_up(raw_obj);
    q.background = round_half_up(raw_bg);
    const int target = round_half_up(raw_hand + raw_obj + raw_bg);
    q.background = std::clamp(q.background + (target - q.total()), 0, n_bg);
    return q;
}

namespace {

// Patch index containing a keypoint, or -1 when it falls outside the image.
int keypoint_patch(const Vec2& kp, const PatchGrid& grid) {
    if (kp.x() < 0.0 || kp.y() < 0.0 || kp.x() >= grid.image_size || kp.y() >= grid.image_size)
        return -1;
    const int c = std::min(static_cast<int>(kp.x()) / grid.patch_size, grid.cols - 1);
    const int r = std::min(static_cast<int>(kp.y()) / grid.patch_size, grid.rows - 1);
    return r * grid.cols + c;
}

// Appends the patch of joint `j` plus its dilation ring, hand patches only,
// deduplicated, in a fixed row-major neighbour order.
void push_joint_patches(int joint, const std::array<Vec2, 21>& kps, const PatchGrid& grid,
                        const RegionLabels& labels, int dilation,
                        std::vector<uint8_t>& seen, std::vector<int>& out) {
    const int p = keypoint_patch(kps[joint], grid);
    if (p < 0) return;
    const int pr = p / grid.cols, pc = p % grid.cols;
    if (labels.label[p] == Region::hand && !seen[p]) {
        seen[p] = 1;
        out.push_back(p);
    }
    for (int dr = -dilation; dr <= dilation; ++dr) {
        for (int dc = -dilation; dc <= dilation; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int r = pr + dr, c = pc + dc;
            if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols) continue;
            const int q = r * grid.cols + c;
            if (labels.label[q] == Region::hand && !seen[q]) {
                seen[q] = 1;
                out.push_back(q);
            }
        }
    }
}

std::vector<int> region_patches(const RegionLabels& labels, Region region) {
    std::vector<int> out;
    for (size_t i = 0; i < labels.label.size(); ++i)
        if (labels.label[i] == region) out.push_back(static_cast<int>(i));
    return out;
}

// First k of a seeded shuffle.
std::vector<int> pick_uniform(std::vector<int> pool, int k, Rng& rng) {
    rng.shuffle(pool);
    pool.resize(std::min<size_t>(pool.size(), k));
    return pool;
}

}  // namespace

std::vector<int> skeleton_guided_select(const RegionLabels& labels, const PatchGrid& grid,
                                        int quota_hand_keep,
                                        const std::array<Vec2, 21>& keypoints2d,
                                        MaskPattern pattern, int dilation, uint64_t seed) {
    Rng rng(seed);
    const std::vector<int> hand_patches = region_patches(labels, Region::hand);
    const int budget = static_cast<int>(hand_patches.size()) - quota_hand_keep;
    if (budget <= 0) return {};

    std::vector<uint8_t> seen(grid.patch_count(), 0);
    std::vector<int> priority;

    switch (pattern) {
        case MaskPattern::single_finger: {
            const int finger = static_cast<int>(rng.uniform_int(kHandFingers));
            // The finger chain is a path, so DFS from its root is base-to-tip.
            for (int l = 0; l < 4; ++l)
                push_joint_patches(finger_joint(finger, l), keypoints2d, grid, labels,
                                   dilation, seen, priority);
            break;
        }
        case MaskPattern::all_fingertips: {
            for (int f = 0; f < kHandFingers; ++f)
                push_joint_patches(fingertip_joint(f), keypoints2d, grid, labels, dilation,
                                   seen, priority);
            break;
        }
        case MaskPattern::skeleton_random: {
            std::vector<int> queue{0};
            for (size_t head = 0; head < queue.size(); ++head) {
                const int j = queue[head];
                push_joint_patches(j, keypoints2d, grid, labels, dilation, seen, priority);
                std::vector<int> children;
                if (j == 0)
                    for (int f = 0; f < kHandFingers; ++f) children.push_back(finger_joint(f, 0));
                else if ((j - 1) % 4 < 3)
                    children.push_back(j + 1);
                rng.shuffle(children);
                queue.insert(queue.end(), children.begin(), children.end());
            }
            break;
        }
        case MaskPattern::random:
            throw InvalidConfig("skeleton_guided_select: pattern must be skeleton-guided");
    }

    std::vector<int> masked(priority.begin(),
                            priority.begin() + std::min<size_t>(priority.size(), budget));
    if (static_cast<int>(masked.size()) < budget) {
        std::vector<int> rest;
        for (int p : hand_patches)
            if (!seen[p]) rest.push_back(p);
        for (int p : pick_uniform(std::move(rest), budget - static_cast<int>(masked.size()), rng))
            masked.push_back(p);
    }
    return masked;
}

MaskPlan build_mask_plan(const RegionLabels& labels, const PatchGrid& grid,
                         const std::array<Vec2, 21>& keypoints2d, const MaskConfig& config,
                         uint64_t seed) {
    if (!(config.skeleton_proportion >= 0.0 && config.skeleton_proportion <= 1.0))
        throw InvalidConfig("skeleton_proportion outside [0,1]");
    const KeepQuotas quotas = allocate_keep_counts(labels, config.rates);

    Rng rng(seed);
    MaskPlan plan;
    plan.rng_seed = seed;
    plan.keep.assign(grid.patch_count(), 1);

    const bool use_skeleton = rng.uniform() < config.skeleton_proportion;
    static constexpr MaskPattern kSkeletonPatterns[3] = {
        MaskPattern::single_finger, MaskPattern::all_fingertips, MaskPattern::skeleton_random};
    plan.pattern_used =
        use_skeleton ? kSkeletonPatterns[rng.uniform_int(3)] : MaskPattern::random;

    std::vector<int> hand_masked;
    if (plan.pattern_used == MaskPattern::random) {
        const int budget = labels.count(Region::hand) - quotas.hand;
        hand_masked = pick_uniform(region_patches(labels, Region::hand), budget, rng);
    } else {
        hand_masked = skeleton_guided_select(labels, grid, quotas.hand, keypoints2d,
                                             plan.pattern_used, config.dilation,
                                             rng.next_u64());
    }
    for (int p : hand_masked) plan.keep[p] = 0;

    const int obj_budget = labels.count(Region::object) - quotas.object;
    for (int p : pick_uniform(region_patches(labels, Region::object), obj_budget, rng))
        plan.keep[p] = 0;
    const int bg_budget = labels.count(Region::background) - quotas.background;
    for (int p : pick_uniform(region_patches(labels, Region::background), bg_budget, rng))
        plan.keep[p] = 0;
    return plan;
}

std::string mask_plan_rle(const MaskPlan& plan) {
    std::ostringstream os;
    os << "keep_rle=";
    size_t i = 0;
    uint8_t run_value = 1;
    bool first = true;
    while (i < plan.keep.size()) {
        size_t n = 0;
        while (i + n < plan.keep.size() && plan.keep[i + n] == run_value) ++n;
        os << (first ? "" : ",") << n;
        first = false;
        i += n;
        run_value = !run_value;
    }
    return os.str();
}

}  // namespace hoi
