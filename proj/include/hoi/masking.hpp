#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hoi/geometry.hpp"
#include "hoi/image.hpp"

namespace hoi {

struct PatchGrid {
    int image_size = 0;
    int patch_size = 0;
    int rows = 0;
    int cols = 0;
    int patch_count() const { return rows * cols; }
};

enum class Region : uint8_t { background = 0, hand = 1, object = 2 };

struct RegionLabels {
    std::vector<Region> label;  // one per patch, row-major
    int count(Region r) const {
        int n = 0;
        for (Region l : label) n += (l == r);
        return n;
    }
};

enum class MaskPattern : uint8_t { random = 0, single_finger, all_fingertips, skeleton_random };
const char* mask_pattern_name(MaskPattern p);

struct MaskPlan {
    std::vector<uint8_t> keep;  // one per patch
    MaskPattern pattern_used = MaskPattern::random;
    uint64_t rng_seed = 0;
    int kept_count() const {
        int n = 0;
        for (uint8_t k : keep) n += (k != 0);
        return n;
    }
};

struct MaskRates {
    double hand = 0.50;  // low: hands are the hardest target
    double object = 0.80;
    double background = 0.65;
};

struct MaskConfig {
    MaskRates rates;
    double skeleton_proportion = 0.5;  // probability of skeleton-guided hand sampling
    int dilation = 1;                  // keypoint patch dilation radius, 0 disables
};

struct KeepQuotas {
    int hand = 0;
    int object = 0;
    int background = 0;
    int total() const { return hand + object + background; }
};

// Splits the image into patch_size x patch_size blocks, row-major. `blocks`
// (optional) receives the raw pixel bytes of each patch, row-major within the
// patch, RGB interleaved. Throws InvalidGeometry when the image dimensions are
// not divisible by patch_size.
PatchGrid patchify(const Image& image, int patch_size,
                   std::vector<std::vector<uint8_t>>* blocks = nullptr);

// Inverse of patchify (used to verify losslessness).
Image reassemble_patches(const PatchGrid& grid,
                         const std::vector<std::vector<uint8_t>>& blocks);

// A patch is `hand` if it contains at least one hand pixel, else `object` if
// it contains an object pixel, else `background`.
RegionLabels classify_patches(const PatchGrid& grid, const std::vector<uint8_t>& hand_mask,
                              const std::vector<uint8_t>& obj_mask);

// Per-region keep quotas: quota_r = round_half_up(n_r * (1 - rate_r)). Any
// mismatch against round_half_up of the exact global sum is absorbed by the
// background quota, so the total token count is stable under the rounding.
KeepQuotas allocate_keep_counts(const RegionLabels& labels, const MaskRates& rates);

// Hand patches to MASK, chosen by traversing the 21-joint tree. Keypoints are
// mapped to their containing patch plus an 8-neighbourhood dilation; patterns:
//   single_finger  - DFS down one uniformly chosen finger chain
//   all_fingertips - the five leaf-joint patches first
//   skeleton_random- BFS from the wrist with randomized child order
// The remaining mask budget is filled with uniform random hand patches, and
// the result always meets the exact hand keep quota.
std::vector<int> skeleton_guided_select(const RegionLabels& labels, const PatchGrid& grid,
                                        int quota_hand_keep,
                                        const std::array<Vec2, 21>& keypoints2d,
                                        MaskPattern pattern, int dilation, uint64_t seed);

// Full plan: with probability `skeleton_proportion` the hand uses a skeleton
// pattern (drawn uniformly from the three), otherwise uniform random; object
// and background are always uniform random at their rates.
MaskPlan build_mask_plan(const RegionLabels& labels, const PatchGrid& grid,
                         const std::array<Vec2, 21>& keypoints2d, const MaskConfig& config,
                         uint64_t seed);

// Run-length encoding of the keep bitmap, starting with a keep run:
// "keep_rle=k0,m0,k1,m1,..." (counts may be zero only in the leading run).
std::string mask_plan_rle(const MaskPlan& plan);

}  // namespace hoi
