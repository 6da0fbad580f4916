#pragma once

#include "nltl2p/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace nltl2p {

/// Top-left spatial corner (i1, i2) of a full-band block (FBB).
struct BlockPosition {
    std::size_t row = 0;  // along mode 1
    std::size_t col = 0;  // along mode 2

    auto operator<=>(const BlockPosition&) const = default;
};

struct BlockMatchingParams {
    std::size_t block_size = 5;        // r; slabs have m1 = r * r rows
    std::size_t stride = 5;            // spacing of reference blocks
    std::size_t window = 30;           // side of the square search window
    std::size_t group_size = 128;      // m2, members per group (reference included)
    std::size_t candidate_stride = 1;  // spacing of candidate blocks inside the window
};

/// Frozen output of block matching.
///
/// `groups[j]` holds `group_size` distinct indices into `fbb_grid`; the first
/// entry is group j's reference block. `fbb_grid` lists only blocks used by
/// at least one group, sorted with the row coordinate varying fastest.
struct BlockMatchingPlan {
    Dims3 image_dims{0, 0, 0};
    BlockMatchingParams params;
    std::vector<BlockPosition> fbb_grid;
    std::vector<std::vector<std::size_t>> groups;

    std::size_t group_count() const noexcept { return groups.size(); }
    std::size_t group_size() const noexcept { return params.group_size; }

    /// (m1, m2, m3) = (r^2, m2, I3).
    Dims3 slab_dims() const noexcept {
        return {params.block_size * params.block_size, params.group_size, image_dims[2]};
    }

    /// Structural checks: index ranges, member distinctness, group sizes,
    /// blocks inside the image. Throws IntegrityError.
    void validate() const;

    bool operator==(const BlockMatchingPlan& other) const;
};

/// Group every reference block with its `group_size` nearest candidates
/// (Frobenius distance over all bands) inside its search window. The
/// reference always leads its group; the rest are ordered by (distance,
/// grid scan index).
BlockMatchingPlan build_plan(const Tensor3& hsi, const BlockMatchingParams& params);

/// R: gather every group into a slab of shape (r^2, m2, I3). In-block pixel
/// (u, v) maps to slab row u + r * v.
Tensor4 extract(const BlockMatchingPlan& plan, const Tensor3& hsi);

/// R^T: scatter-add every slab member back onto its spatial footprint. The
/// accumulation order is fixed (group order, then member order).
Tensor3 transpose_apply(const BlockMatchingPlan& plan, const Tensor4& groups);

/// W_R: number of (group, member) pairs covering each pixel, replicated over
/// bands. Throws IntegrityError if any pixel is uncovered.
Tensor3 weight_tensor(const BlockMatchingPlan& plan);

std::string plan_to_json(const BlockMatchingPlan& plan);
BlockMatchingPlan plan_from_json(const std::string& text);

void write_plan(const BlockMatchingPlan& plan, const std::string& path);
BlockMatchingPlan read_plan(const std::string& path);

}  // namespace nltl2p
