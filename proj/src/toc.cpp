#include "meshprot/toc.hpp"

#include <cmath>
#include <stdexcept>

namespace meshprot {

void TocCurve::validate() const {
    if (points.size() < 2)
        throw std::runtime_error("toc curve '" + id + "': needs at least 2 points");
    for (size_t k = 0; k < points.size(); ++k) {
        if (points[k].first <= 0.0 || points[k].second <= 0.0)
            throw std::runtime_error("toc curve '" + id + "': currents and times must be positive");
        if (k > 0) {
            if (points[k].first <= points[k - 1].first)
                throw std::runtime_error("toc curve '" + id + "': currents must be strictly increasing");
            if (points[k].second >= points[k - 1].second)
                throw std::runtime_error("toc curve '" + id + "': times must be strictly decreasing");
        }
    }
}

std::optional<double> toc_time(const TocCurve& curve, double i_primary_a) {
    if (i_primary_a < curve.i_mi()) return std::nullopt;
    const auto& pts = curve.points;
    if (i_primary_a >= pts.back().first) return pts.back().second;
    // find the bracketing segment and interpolate on log-log axes
    size_t k = 1;
    while (k < pts.size() && pts[k].first < i_primary_a) ++k;
    const double x0 = std::log(pts[k - 1].first), y0 = std::log(pts[k - 1].second);
    const double x1 = std::log(pts[k].first), y1 = std::log(pts[k].second);
    const double x = std::log(i_primary_a);
    const double y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    return std::exp(y);
}

}  // namespace meshprot
