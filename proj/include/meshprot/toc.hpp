#pragma once

#include <optional>
#include <string>
#include <vector>

namespace meshprot {

/// Time-overcurrent characteristic of a lateral protection means
/// (total-clearing curve for a fuse, tripping curve for a relay).
/// Tabulated as (current, time) points; log-log interpolated between
/// points, no operation below the minimum intersecting current and
/// clamped to the last tabulated time above the largest current.
struct TocCurve {
    std::string id;
    std::vector<std::pair<double, double>> points;  // (primary A, seconds)

    /// Minimum intersecting current: the smallest tabulated current.
    double i_mi() const { return points.front().first; }

    void validate() const;

    bool operator==(const TocCurve&) const = default;
};

/// Operate time for a given primary current, or nullopt when the current
/// does not intersect the characteristic (i < I_MI).
std::optional<double> toc_time(const TocCurve& curve, double i_primary_a);

}  // namespace meshprot
