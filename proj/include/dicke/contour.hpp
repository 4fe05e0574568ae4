#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace dicke::contour {

/// Connected components of the strict sublevel set {values < level} under
/// 4-connectivity. 4-connectivity keeps the two lobes of a saddle separate
/// (diagonal adjacency would bridge them across the saddle point).
inline int count_components_below(const Eigen::MatrixXd& values, double level) {
    const auto rows = values.rows(), cols = values.cols();
    std::vector<char> mask(static_cast<std::size_t>(rows * cols));
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            mask[static_cast<std::size_t>(c * rows + r)] = values(r, c) < level ? 1 : 0;

    int components = 0;
    std::vector<Eigen::Index> stack;
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto start = c * rows + r;
            if (!mask[static_cast<std::size_t>(start)]) continue;
            ++components;
            mask[static_cast<std::size_t>(start)] = 0;
            stack.assign(1, start);
            while (!stack.empty()) {
                const auto cur = stack.back();
                stack.pop_back();
                const auto cr = cur % rows, cc = cur / rows;
                const Eigen::Index nbr[4][2] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
                for (const auto& nb : nbr) {
                    if (nb[0] < 0 || nb[0] >= rows || nb[1] < 0 || nb[1] >= cols) continue;
                    const auto id = nb[1] * rows + nb[0];
                    if (mask[static_cast<std::size_t>(id)]) {
                        mask[static_cast<std::size_t>(id)] = 0;
                        stack.push_back(id);
                    }
                }
            }
        }
    }
    return components;
}

struct Polyline {
    std::vector<std::pair<double, double>> points; // (x, y)
    bool closed = false;
};

namespace detail {

// Grid edges carry crossing points; identifying them by integer ids (cell +
// orientation) sidesteps floating-point keys when stitching segments.
struct EdgeId {
    Eigen::Index r, c;
    int horizontal; // 1: edge from (r,c) to (r,c+1) along x; 0: to (r+1,c) along y
    bool operator<(const EdgeId& o) const {
        if (r != o.r) return r < o.r;
        if (c != o.c) return c < o.c;
        return horizontal < o.horizontal;
    }
};

inline std::pair<double, double> edge_point(const EdgeId& e, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& y, const Eigen::MatrixXd& v,
                                            double level) {
    // values are indexed (x index, y index)
    const double va = v(e.r, e.c);
    if (e.horizontal) {
        const double vb = v(e.r, e.c + 1);
        const double t = (level - va) / (vb - va);
        return {x(e.r), y(e.c) + t * (y(e.c + 1) - y(e.c))};
    }
    const double vb = v(e.r + 1, e.c);
    const double t = (level - va) / (vb - va);
    return {x(e.r) + t * (x(e.r + 1) - x(e.r)), y(e.c)};
}

} // namespace detail

/// Marching-squares isolines of values(i, j) sampled at (x_axis[i],
/// y_axis[j]), stitched into ordered polylines. Saddle cells are split by
/// the cell-center average. Deterministic: cells are visited row-major and
/// chains start from the smallest unused edge.
inline std::vector<Polyline> extract_isolines(const Eigen::MatrixXd& values,
                                              const Eigen::VectorXd& x_axis,
                                              const Eigen::VectorXd& y_axis, double level) {
    using detail::EdgeId;
    const auto nx = values.rows(), ny = values.cols();
    std::map<EdgeId, std::vector<EdgeId>> links;

    auto connect = [&](const EdgeId& a, const EdgeId& b) {
        links[a].push_back(b);
        links[b].push_back(a);
    };

    for (Eigen::Index i = 0; i + 1 < nx; ++i) {
        for (Eigen::Index j = 0; j + 1 < ny; ++j) {
            const bool b00 = values(i, j) >= level;
            const bool b01 = values(i, j + 1) >= level;
            const bool b10 = values(i + 1, j) >= level;
            const bool b11 = values(i + 1, j + 1) >= level;
            const int pattern = (b00 ? 1 : 0) | (b10 ? 2 : 0) | (b11 ? 4 : 0) | (b01 ? 8 : 0);
            if (pattern == 0 || pattern == 15) continue;

            const EdgeId left{i, j, 1};      // between (i,j) and (i,j+1)
            const EdgeId right{i + 1, j, 1}; // between (i+1,j) and (i+1,j+1)
            const EdgeId bottom{i, j, 0};    // between (i,j) and (i+1,j)
            const EdgeId top{i, j + 1, 0};   // between (i,j+1) and (i+1,j+1)

            switch (pattern) {
                case 1: case 14: connect(left, bottom); break;
                case 2: case 13: connect(bottom, right); break;
                case 3: case 12: connect(left, right); break;
                case 4: case 11: connect(right, top); break;
                case 6: case 9:  connect(bottom, top); break;
                case 7: case 8:  connect(left, top); break;
                case 5: case 10: {
                    const double center =
                        0.25 * (values(i, j) + values(i, j + 1) + values(i + 1, j) + values(i + 1, j + 1));
                    const bool center_high = center >= level;
                    if ((pattern == 5) == center_high) {
                        connect(left, top);
                        connect(bottom, right);
                    } else {
                        connect(left, bottom);
                        connect(right, top);
                    }
                    break;
                }
                default: break;
            }
        }
    }

    std::vector<Polyline> out;
    std::map<EdgeId, std::vector<EdgeId>> remaining = links;
    auto take_link = [&](const EdgeId& from, const EdgeId& to) {
        auto& v = remaining[from];
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!(v[k] < to) && !(to < v[k])) {
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(k));
                return;
            }
        }
    };

    while (!remaining.empty()) {
        // prefer an open end (degree 1); otherwise any edge starts a loop
        auto start = remaining.begin();
        for (auto it = remaining.begin(); it != remaining.end(); ++it) {
            if (it->second.size() == 1) {
                start = it;
                break;
            }
        }
        Polyline line;
        EdgeId cur = start->first;
        line.points.push_back(detail::edge_point(cur, x_axis, y_axis, values, level));
        while (true) {
            auto it = remaining.find(cur);
            if (it == remaining.end() || it->second.empty()) {
                remaining.erase(cur);
                break;
            }
            const EdgeId next = it->second.front();
            take_link(cur, next);
            if (remaining[cur].empty()) remaining.erase(cur);
            take_link(next, cur);
            line.points.push_back(detail::edge_point(next, x_axis, y_axis, values, level));
            cur = next;
        }
        if (line.points.size() >= 3 && line.points.front() == line.points.back()) line.closed = true;
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace dicke::contour
