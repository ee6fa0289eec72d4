#include "foj/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "foj/parallel.hpp"

namespace foj {

void PointCloud::update_bounds() {
    if (points.empty()) {
        bb_min = bb_max = {0, 0, 0};
        return;
    }
    bb_min = bb_max = points[0];
    for (const auto& p : points)
        for (int a = 0; a < 3; ++a) {
            bb_min[a] = std::min(bb_min[a], p[a]);
            bb_max[a] = std::max(bb_max[a], p[a]);
        }
}

double PointCloud::bbox_diagonal() const {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double e = bb_max[a] - bb_min[a];
        s += e * e;
    }
    return std::sqrt(s);
}

PointCloud read_xyz(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    PointCloud pc;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::array<double, 3> p;
        if (!(ss >> p[0] >> p[1] >> p[2]))
            throw std::runtime_error("bad xyz line in " + path + ": " + line);
        pc.points.push_back(p);
    }
    pc.update_bounds();
    return pc;
}

void write_xyz(const std::string& path, const PointCloud& pc) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.precision(9);
    for (const auto& p : pc.points)
        f << p[0] << ' ' << p[1] << ' ' << p[2] << "\n";
}

VoxelizeResult voxelize(const PointCloud& pc, int grid_dim) {
    if (pc.points.empty()) throw std::invalid_argument("voxelize: empty cloud");
    if (grid_dim < 3) throw std::invalid_argument("voxelize: grid_dim too small");

    PointCloud bounded = pc;
    bounded.update_bounds();
    std::array<double, 3> extent;
    double base = 0.0;
    for (int a = 0; a < 3; ++a) {
        extent[a] = bounded.bb_max[a] - bounded.bb_min[a];
        base = std::max(base, extent[a]);
    }
    if (base == 0.0) base = 1.0;  // degenerate cloud (single location)

    VoxelizeResult r;
    for (int a = 0; a < 3; ++a) {
        const double e = extent[a] > 0.0 ? extent[a] : base;
        r.transform.voxel[a] = e / (grid_dim - 2);
        r.transform.origin[a] = bounded.bb_min[a] - r.transform.voxel[a];
    }
    r.volume = Volume(grid_dim, grid_dim, grid_dim);

    for (const auto& p : pc.points) {
        int idx[3];
        for (int a = 0; a < 3; ++a) {
            const int i = static_cast<int>(
                std::floor((p[a] - r.transform.origin[a]) / r.transform.voxel[a]));
            idx[a] = std::clamp(i, 0, grid_dim - 1);
        }
        r.volume.at(idx[2], idx[1], idx[0]) += 1.0;
    }
    const double mx = r.volume.max_value();
    if (mx > 0.0)
        for (auto& v : r.volume.data) v /= mx;
    return r;
}

PointCloud devoxelize_topk(const Volume& vol, int k, const VoxelTransform& t,
                           int* shortfall) {
    if (k < 1) throw std::invalid_argument("devoxelize_topk: k must be >= 1");
    std::vector<std::size_t> nonzero;
    nonzero.reserve(vol.size() / 8);
    for (std::size_t i = 0; i < vol.size(); ++i)
        if (vol.data[i] != 0.0) nonzero.push_back(i);

    const std::size_t take = std::min<std::size_t>(k, nonzero.size());
    if (shortfall) *shortfall = static_cast<int>(k - take);

    auto better = [&](std::size_t a, std::size_t b) {
        if (vol.data[a] != vol.data[b]) return vol.data[a] > vol.data[b];
        return a < b;  // lexicographic (z,y,x) == linear index order
    };
    if (take < nonzero.size())
        std::nth_element(nonzero.begin(), nonzero.begin() + take, nonzero.end(),
                         better);
    std::sort(nonzero.begin(), nonzero.begin() + take, better);

    PointCloud out;
    out.points.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t idx = nonzero[i];
        const int x = static_cast<int>(idx % vol.W);
        const int y = static_cast<int>((idx / vol.W) % vol.H);
        const int z = static_cast<int>(idx / (static_cast<std::size_t>(vol.W) * vol.H));
        out.points.push_back(t.center(z, y, x));
    }
    out.update_bounds();
    return out;
}

PointCloud add_outlier_noise(const PointCloud& pc, double ratio,
                             double sigma_surface, std::uint64_t seed) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw std::invalid_argument("outlier ratio must be in [0, 1)");
    PointCloud out = pc;
    out.update_bounds();
    const std::size_t n_out = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(pc.size()) / (1.0 - ratio)));
    if (n_out == 0) return out;

    const double sigma =
        sigma_surface > 0.0 ? sigma_surface : 0.05 * out.bbox_diagonal();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pc.size() - 1);
    std::normal_distribution<double> gauss(0.0, sigma);
    out.points.reserve(pc.size() + n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        auto p = pc.points[pick(rng)];
        for (int a = 0; a < 3; ++a) p[a] += gauss(rng);
        out.points.push_back(p);
    }
    out.update_bounds();
    return out;
}

PointCloud add_spread_noise(const PointCloud& pc, std::size_t count, double pad,
                            std::uint64_t seed) {
    PointCloud out = pc;
    out.update_bounds();
    if (count == 0) return out;
    std::mt19937_64 rng(seed);
    std::array<std::uniform_real_distribution<double>, 3> uni;
    for (int a = 0; a < 3; ++a)
        uni[a] = std::uniform_real_distribution<double>(out.bb_min[a] - pad,
                                                        out.bb_max[a] + pad);
    out.points.reserve(pc.size() + count);
    for (std::size_t i = 0; i < count; ++i)
        out.points.push_back({uni[0](rng), uni[1](rng), uni[2](rng)});
    out.update_bounds();
    return out;
}

// --- nearest neighbors -------------------------------------------------------

namespace {

// Median-split kd-tree over an index permutation; nodes own contiguous
// [begin, end) ranges, leaves hold up to kLeaf points.
class KdTree {
public:
    explicit KdTree(const std::vector<std::array<double, 3>>& pts)
        : pts_(pts), index_(pts.size()) {
        std::iota(index_.begin(), index_.end(), std::size_t{0});
        nodes_.reserve(2 * pts.size() / kLeaf + 2);
        root_ = build(0, pts.size());
    }

    double nearest_sq(const std::array<double, 3>& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, q, best);
        return best;
    }

private:
    static constexpr std::size_t kLeaf = 16;

    struct Node {
        int axis = -1;          // -1 for leaf
        double split = 0.0;
        std::size_t begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end) {
        Node n;
        n.begin = begin;
        n.end = end;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        if (end - begin <= kLeaf) return id;

        std::array<double, 3> lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (std::size_t i = begin; i < end; ++i)
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], pts_[index_[i]][a]);
                hi[a] = std::max(hi[a], pts_[index_[i]][a]);
            }
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;

        const std::size_t mid = (begin + end) / 2;
        std::nth_element(index_.begin() + begin, index_.begin() + mid,
                         index_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return pts_[a][axis] < pts_[b][axis];
                         });
        nodes_[id].axis = axis;
        nodes_[id].split = pts_[index_[mid]][axis];
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(int id, const std::array<double, 3>& q, double& best) const {
        const Node& n = nodes_[id];
        if (n.axis < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const auto& p = pts_[index_[i]];
                const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
                const double d = dx * dx + dy * dy + dz * dz;
                if (d < best) best = d;
            }
            return;
        }
        const double diff = q[n.axis] - n.split;
        const int near = diff < 0.0 ? n.left : n.right;
        const int far = diff < 0.0 ? n.right : n.left;
        search(near, q, best);
        if (diff * diff < best) search(far, q, best);
    }

    const std::vector<std::array<double, 3>>& pts_;
    std::vector<std::size_t> index_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

double mean_nn_sq(const PointCloud& from, const KdTree& tree) {
    const std::size_t n = from.size();
    const std::size_t chunk = 1024;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_chunks(n, chunk, [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i)
            acc += tree.nearest_sq(from.points[i]);
        partial[b / chunk] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total / static_cast<double>(n);
}

}  // namespace

double chamfer_l2(const PointCloud& a, const PointCloud& b) {
    if (a.points.empty() || b.points.empty())
        throw std::invalid_argument("chamfer_l2: empty point cloud");
    const KdTree ta(a.points);
    const KdTree tb(b.points);
    return mean_nn_sq(a, tb) + mean_nn_sq(b, ta);
}

}  // namespace foj
