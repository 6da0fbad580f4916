#include "nltl2p/block_matching.hpp"

#include "nltl2p/errors.hpp"
#include "nltl2p/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace nltl2p {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// 0, s, 2s, ... up to extent - r, with the final position clamped to extent - r.
std::vector<std::size_t> lattice(std::size_t extent, std::size_t r, std::size_t s) {
    std::vector<std::size_t> out;
    const std::size_t last = extent - r;
    for (std::size_t v = 0; v <= last; v += s) out.push_back(v);
    if (out.back() != last) out.push_back(last);
    return out;
}

void check_params(const Dims3& dims, const BlockMatchingParams& p) {
    if (p.block_size == 0 || p.stride == 0 || p.candidate_stride == 0 || p.group_size == 0) {
        throw UsageError("block matching: block_size, stride, candidate_stride and group_size must be positive");
    }
    if (p.block_size > std::min(dims[0], dims[1])) {
        throw UsageError("block matching: block size exceeds the spatial extent of the image");
    }
    if (p.window < p.block_size) {
        throw ConfigError("block matching: window (" + std::to_string(p.window) +
                          ") smaller than block size (" + std::to_string(p.block_size) + ")");
    }
    if (p.stride > p.block_size) {
        // Reference blocks would leave uncovered pixels and W_R would vanish there.
        throw ConfigError("block matching: stride larger than block size leaves pixels uncovered");
    }
}

double block_distance(const Tensor3& t, BlockPosition a, BlockPosition b, std::size_t r) {
    const std::size_t bands = t.dims()[2];
    double d = 0.0;
    for (std::size_t k = 0; k < bands; ++k) {
        for (std::size_t v = 0; v < r; ++v) {
            for (std::size_t u = 0; u < r; ++u) {
                const double diff = t(a.row + u, a.col + v, k) - t(b.row + u, b.col + v, k);
                d += diff * diff;
            }
        }
    }
    return d;
}

void check_plan_dims(const BlockMatchingPlan& plan, const Dims3& dims) {
    if (plan.image_dims != dims) {
        throw UsageError("block matching: tensor dims do not match the plan");
    }
}

}  // namespace

void BlockMatchingPlan::validate() const {
    const std::size_t r = params.block_size;
    for (const auto& pos : fbb_grid) {
        if (pos.row + r > image_dims[0] || pos.col + r > image_dims[1]) {
            throw IntegrityError("plan: block exceeds the image bounds");
        }
    }
    std::vector<char> used(fbb_grid.size(), 0);
    for (const auto& g : groups) {
        if (g.size() != params.group_size) throw IntegrityError("plan: group has wrong size");
        std::vector<std::size_t> sorted = g;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw IntegrityError("plan: repeated member inside a group");
        }
        for (std::size_t l : g) {
            if (l >= fbb_grid.size()) throw IntegrityError("plan: member index out of range");
            used[l] = 1;
        }
    }
    if (std::find(used.begin(), used.end(), 0) != used.end()) {
        throw IntegrityError("plan: FBB listed in the grid but not used by any group");
    }
}

bool BlockMatchingPlan::operator==(const BlockMatchingPlan& o) const {
    return image_dims == o.image_dims && params.block_size == o.params.block_size &&
           params.stride == o.params.stride && params.window == o.params.window &&
           params.group_size == o.params.group_size &&
           params.candidate_stride == o.params.candidate_stride && fbb_grid == o.fbb_grid &&
           groups == o.groups;
}

BlockMatchingPlan build_plan(const Tensor3& hsi, const BlockMatchingParams& params) {
    const Dims3 dims = hsi.dims();
    check_params(dims, params);
    const std::size_t r = params.block_size;
    const std::size_t rows = dims[0] - r + 1;  // possible top-left rows
    const std::size_t cols = dims[1] - r + 1;

    // Union of the reference lattice and the candidate lattice, scan index = row + rows * col.
    std::vector<char> on_grid(rows * cols, 0);
    const auto ref_rows = lattice(dims[0], r, params.stride);
    const auto ref_cols = lattice(dims[1], r, params.stride);
    for (std::size_t c : lattice(dims[1], r, params.candidate_stride)) {
        for (std::size_t rr : lattice(dims[0], r, params.candidate_stride)) on_grid[rr + rows * c] = 1;
    }
    for (std::size_t c : ref_cols) {
        for (std::size_t rr : ref_rows) on_grid[rr + rows * c] = 1;
    }

    std::vector<BlockPosition> references;
    references.reserve(ref_rows.size() * ref_cols.size());
    for (std::size_t c : ref_cols) {
        for (std::size_t rr : ref_rows) references.push_back({rr, c});
    }

    const std::size_t half = (params.window - r) / 2;
    const std::size_t reach = params.window - r - half;
    std::vector<std::vector<std::size_t>> groups(references.size());

    parallel_for(references.size(), [&](std::size_t j) {
        const BlockPosition ref = references[j];
        const std::size_t r0 = ref.row > half ? ref.row - half : 0;
        const std::size_t r1 = std::min(rows - 1, ref.row + reach);
        const std::size_t c0 = ref.col > half ? ref.col - half : 0;
        const std::size_t c1 = std::min(cols - 1, ref.col + reach);

        struct Candidate {
            double distance;
            std::size_t scan;
        };
        std::vector<Candidate> cands;
        for (std::size_t c = c0; c <= c1; ++c) {
            for (std::size_t rr = r0; rr <= r1; ++rr) {
                const std::size_t scan = rr + rows * c;
                if (!on_grid[scan] || (rr == ref.row && c == ref.col)) continue;
                cands.push_back({block_distance(hsi, ref, {rr, c}, r), scan});
            }
        }
        if (cands.size() + 1 < params.group_size) {
            throw ConfigError("block matching: window holds only " + std::to_string(cands.size() + 1) +
                              " candidate blocks, fewer than group size " +
                              std::to_string(params.group_size));
        }
        const auto by_distance = [](const Candidate& a, const Candidate& b) {
            return a.distance < b.distance || (a.distance == b.distance && a.scan < b.scan);
        };
        const std::size_t keep = params.group_size - 1;
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                          by_distance);
        auto& g = groups[j];
        g.reserve(params.group_size);
        g.push_back(ref.row + rows * ref.col);
        for (std::size_t i = 0; i < keep; ++i) g.push_back(cands[i].scan);
    });

    // Compact the grid to blocks that some group uses.
    std::vector<std::size_t> remap(rows * cols, kNone);
    for (const auto& g : groups) {
        for (std::size_t s : g) remap[s] = 0;
    }
    BlockMatchingPlan plan;
    plan.image_dims = dims;
    plan.params = params;
    for (std::size_t s = 0; s < remap.size(); ++s) {
        if (remap[s] == kNone) continue;
        remap[s] = plan.fbb_grid.size();
        plan.fbb_grid.push_back({s % rows, s / rows});
    }
    for (auto& g : groups) {
        for (auto& s : g) s = remap[s];
    }
    plan.groups = std::move(groups);
    return plan;
}

Tensor4 extract(const BlockMatchingPlan& plan, const Tensor3& hsi) {
    check_plan_dims(plan, hsi.dims());
    const std::size_t r = plan.params.block_size;
    const std::size_t bands = hsi.dims()[2];
    Tensor4 out(plan.slab_dims(), plan.group_count());
    parallel_for(plan.group_count(), [&](std::size_t j) {
        Tensor3& slab = out[j];
        const auto& g = plan.groups[j];
        for (std::size_t k = 0; k < bands; ++k) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const BlockPosition pos = plan.fbb_grid[g[i]];
                for (std::size_t v = 0; v < r; ++v) {
                    for (std::size_t u = 0; u < r; ++u) {
                        slab(u + r * v, i, k) = hsi(pos.row + u, pos.col + v, k);
                    }
                }
            }
        }
    });
    return out;
}

Tensor3 transpose_apply(const BlockMatchingPlan& plan, const Tensor4& groups) {
    if (groups.count() != plan.group_count() || groups.slab_dims() != plan.slab_dims()) {
        throw UsageError("transpose_apply: group tensor dims do not match the plan");
    }
    const std::size_t r = plan.params.block_size;
    const std::size_t bands = plan.image_dims[2];
    Tensor3 out(plan.image_dims);
    for (std::size_t j = 0; j < plan.group_count(); ++j) {
        const Tensor3& slab = groups[j];
        const auto& g = plan.groups[j];
        for (std::size_t i = 0; i < g.size(); ++i) {
            const BlockPosition pos = plan.fbb_grid[g[i]];
            for (std::size_t k = 0; k < bands; ++k) {
                for (std::size_t v = 0; v < r; ++v) {
                    for (std::size_t u = 0; u < r; ++u) {
                        out(pos.row + u, pos.col + v, k) += slab(u + r * v, i, k);
                    }
                }
            }
        }
    }
    return out;
}

Tensor3 weight_tensor(const BlockMatchingPlan& plan) {
    const std::size_t r = plan.params.block_size;
    const auto [n1, n2, n3] = plan.image_dims;
    Tensor3 out(plan.image_dims);
    for (const auto& g : plan.groups) {
        for (std::size_t l : g) {
            const BlockPosition pos = plan.fbb_grid[l];
            for (std::size_t v = 0; v < r; ++v) {
                for (std::size_t u = 0; u < r; ++u) out(pos.row + u, pos.col + v, 0) += 1.0;
            }
        }
    }
    for (std::size_t c = 0; c < n2; ++c) {
        for (std::size_t rr = 0; rr < n1; ++rr) {
            const double w = out(rr, c, 0);
            if (w <= 0.0) {
                throw IntegrityError("weight tensor: pixel (" + std::to_string(rr) + ", " +
                                     std::to_string(c) + ") belongs to no group");
            }
            for (std::size_t k = 1; k < n3; ++k) out(rr, c, k) = w;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON form:
// {
//   "format": "nltl2p-plan", "version": 1,
//   "image_dims": [I1, I2, I3],
//   "block_size": r, "stride": s, "window": w, "group_size": m2, "candidate_stride": c,
//   "fbb_grid": [[row, col], ...],
//   "groups": [[l_1, ..., l_m2], ...]
// }
// ---------------------------------------------------------------------------

std::string plan_to_json(const BlockMatchingPlan& plan) {
    nlohmann::json j;
    j["format"] = "nltl2p-plan";
    j["version"] = 1;
    j["image_dims"] = plan.image_dims;
    j["block_size"] = plan.params.block_size;
    j["stride"] = plan.params.stride;
    j["window"] = plan.params.window;
    j["group_size"] = plan.params.group_size;
    j["candidate_stride"] = plan.params.candidate_stride;
    auto grid = nlohmann::json::array();
    for (const auto& p : plan.fbb_grid) grid.push_back({p.row, p.col});
    j["fbb_grid"] = std::move(grid);
    j["groups"] = plan.groups;
    return j.dump();
}

BlockMatchingPlan plan_from_json(const std::string& text) {
    BlockMatchingPlan plan;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format").get<std::string>() != "nltl2p-plan" || j.at("version").get<int>() != 1) {
            throw FormatError("plan: unsupported format or version");
        }
        plan.image_dims = j.at("image_dims").get<Dims3>();
        plan.params.block_size = j.at("block_size").get<std::size_t>();
        plan.params.stride = j.at("stride").get<std::size_t>();
        plan.params.window = j.at("window").get<std::size_t>();
        plan.params.group_size = j.at("group_size").get<std::size_t>();
        plan.params.candidate_stride = j.at("candidate_stride").get<std::size_t>();
        for (const auto& p : j.at("fbb_grid")) {
            plan.fbb_grid.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
        }
        plan.groups = j.at("groups").get<std::vector<std::vector<std::size_t>>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("plan: ") + e.what());
    }
    try {
        plan.validate();
    } catch (const IntegrityError& e) {
        throw FormatError(e.what());
    }
    return plan;
}

void write_plan(const BlockMatchingPlan& plan, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << plan_to_json(plan) << '\n';
}

BlockMatchingPlan read_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return plan_from_json(ss.str());
}

}  // namespace nltl2p
