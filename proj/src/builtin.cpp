#include "meshprot/builtin.hpp"

#include <stdexcept>

#include "meshprot/parser.hpp"

namespace meshprot {
namespace builtin {

namespace {

// Shared 30T-style fuse total-clearing curve, minimum intersecting
// current 74 A primary.
constexpr const char* kFuse30t = R"([toc]
id = fuse30t
points = 74:190.0, 90:69.771, 95.3:49.552, 131:10.18, 335.2:0.9178, 394.7:0.658, 530.8:0.3712, 666.6:0.2426, 968.7:0.127, 1124.3:0.0983, 3000:0.045
)";

const char* kMesh9Core = R"([network]
name = mesh9
base_mva = 10
base_kv = 20
frequency_hz = 50
mode = grid_connected
ct_ratio = 200:5
vt_ratio = 20000:100

[bus]
id = B1
[bus]
id = B2
[bus]
id = B3
[bus]
id = B4
[bus]
id = B5
[bus]
id = B6
[bus]
id = B7
[bus]
id = B8
[bus]
id = B9
[bus]
id = B10

# double loop through the substation bus B10 plus the interconnection L3_7
[segment]
id = L10_1
from = B10
to = B1
length_km = 2.5
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L1_2
from = B1
to = B2
length_km = 3.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L2_10
from = B2
to = B10
length_km = 3.5
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L2_3
from = B2
to = B3
length_km = 4.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L3_4
from = B3
to = B4
length_km = 3.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L4_5
from = B4
to = B5
length_km = 4.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L5_6
from = B5
to = B6
length_km = 3.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L6_10
from = B6
to = B10
length_km = 5.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L3_7
from = B3
to = B7
length_km = 6.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L7_8
from = B7
to = B8
length_km = 3.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L8_9
from = B8
to = B9
length_km = 3.5
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L4_8
from = B4
to = B8
length_km = 4.0
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[segment]
id = L5_9
from = B5
to = B9
length_km = 4.5
z1_ohm_per_km = 0.2+0.38j
z0_ohm_per_km = 0.8181+1.1227j

[lateral]
id = LAT1
host = B1
endpoint = B1R
toc = fuse30t
series_z1_ohm = 0.6+0.53j
series_z0_ohm = 1.9+1.55j
load_p_mw = 0.6
load_q_mvar = 0.2

[lateral]
id = LAT2
host = B2
endpoint = B2R
toc = fuse30t
series_z1_ohm = 0.6+0.53j
series_z0_ohm = 1.9+1.55j
load_p_mw = 0.7
load_q_mvar = 0.23

[lateral]
id = LAT3
host = B3
endpoint = B3R
toc = fuse30t
series_z1_ohm = 0.75+0.66j
series_z0_ohm = 2.4+1.94j
load_p_mw = 0.8
load_q_mvar = 0.26

[lateral]
id = LAT4
host = B4
endpoint = B4R
toc = fuse30t
series_z1_ohm = 0.6+0.53j
series_z0_ohm = 1.9+1.55j
load_p_mw = 0.7
load_q_mvar = 0.23

[lateral]
id = LAT5
host = B5
endpoint = B5R
toc = fuse30t
series_z1_ohm = 0.9+0.79j
series_z0_ohm = 2.9+2.33j
load_p_mw = 0.9
load_q_mvar = 0.3

[lateral]
id = LAT6
host = B6
endpoint = B6R
toc = fuse30t
series_z1_ohm = 0.6+0.53j
series_z0_ohm = 1.9+1.55j
load_p_mw = 0.6
load_q_mvar = 0.2

[lateral]
id = LAT7
host = B7
endpoint = B7R
toc = fuse30t
series_z1_ohm = 0.75+0.66j
series_z0_ohm = 2.4+1.94j
load_p_mw = 0.75
load_q_mvar = 0.25

[lateral]
id = LAT8
host = B8
endpoint = B8R
toc = fuse30t
series_z1_ohm = 0.6+0.53j
series_z0_ohm = 1.9+1.55j
load_p_mw = 0.75
load_q_mvar = 0.25

[lateral]
id = LAT9
host = B9
endpoint = B9R
toc = fuse30t
series_z1_ohm = 0.75+0.66j
series_z0_ohm = 2.4+1.94j
load_p_mw = 0.7
load_q_mvar = 0.23

[source]
id = GRID
bus = B10
kind = grid
ssc_mva = 250
x_over_r = 10
grounded_mv = true
)";

// base-system PV units ride through faults at unity power factor
const char* kMesh9BasePv = R"([source]
id = PV1
bus = B6
kind = inverter
rated_mva = 2
current_limit_pu = 1.2
reactive_support = false
dispatch_p_mw = 1.6
grounded_mv = true

[source]
id = PV2
bus = B9
kind = inverter
rated_mva = 2
current_limit_pu = 1.2
reactive_support = false
dispatch_p_mw = 1.6
grounded_mv = true
)";

// island-study variant: every PV provides reactive support during faults
const char* kMesh9IidgPv = R"([source]
id = PV1
bus = B6
kind = inverter
rated_mva = 2
current_limit_pu = 1.2
reactive_support = true
dispatch_p_mw = 1.6
grounded_mv = true

[source]
id = PV2
bus = B9
kind = inverter
rated_mva = 2
current_limit_pu = 1.2
reactive_support = true
dispatch_p_mw = 1.6
grounded_mv = true
)";

const char* kMesh9Sg = R"([source]
id = SG1
bus = B4
kind = sync_gen
rated_mva = 7.5
xd_transient_pu = 0.25
grounded_mv = true

[source]
id = SG2
bus = B7
kind = sync_gen
rated_mva = 7.5
xd_transient_pu = 0.25
grounded_mv = true
)";

// Scenario-5 style variant: PV units of the same rating replace the
// synchronous machines and every PV provides reactive support.
const char* kMesh9Iidg = R"([source]
id = PV3
bus = B4
kind = inverter
rated_mva = 7.5
current_limit_pu = 1.2
reactive_support = true
dispatch_p_mw = 2.0
grounded_mv = true

[source]
id = PV4
bus = B7
kind = inverter
rated_mva = 7.5
current_limit_pu = 1.2
reactive_support = true
dispatch_p_mw = 2.0
grounded_mv = true
)";

const char* kIeee14 = R"([network]
name = ieee14-33kv
base_mva = 30
base_kv = 33
frequency_hz = 60
mode = grid_connected
ct_ratio = 400:5
vt_ratio = 33000:100

[bus]
id = B6
[bus]
id = B9
[bus]
id = B10
[bus]
id = B11
[bus]
id = B12
[bus]
id = B13
[bus]
id = B14

[segment]
id = L6_11
from = B6
to = B11
length_km = 6.0
z1_ohm_per_km = 0.1724+0.3610j
z0_ohm_per_km = 0.4310+0.9025j

[segment]
id = L6_12
from = B6
to = B12
length_km = 8.0
z1_ohm_per_km = 0.1673+0.3482j
z0_ohm_per_km = 0.4183+0.8705j

[segment]
id = L6_13
from = B6
to = B13
length_km = 4.0
z1_ohm_per_km = 0.1801+0.3547j
z0_ohm_per_km = 0.4502+0.8868j

[segment]
id = L9_10
from = B9
to = B10
length_km = 2.5
z1_ohm_per_km = 0.1386+0.3681j
z0_ohm_per_km = 0.3464+0.9203j

[segment]
id = L9_14
from = B9
to = B14
length_km = 8.5
z1_ohm_per_km = 0.1629+0.3464j
z0_ohm_per_km = 0.4071+0.8660j

[segment]
id = L10_11
from = B10
to = B11
length_km = 6.0
z1_ohm_per_km = 0.1489+0.3486j
z0_ohm_per_km = 0.3723+0.8716j

[segment]
id = L12_13
from = B12
to = B13
length_km = 6.5
z1_ohm_per_km = 0.3701+0.3349j
z0_ohm_per_km = 0.9253+0.8372j

[segment]
id = L13_14
from = B13
to = B14
length_km = 10.5
z1_ohm_per_km = 0.1772+0.3608j
z0_ohm_per_km = 0.4431+0.9020j

[lateral]
id = LAT6
host = B6
endpoint = B6R
toc = fuse_m
series_z1_ohm = 0.8+0.7j
series_z0_ohm = 2.5+2.0j
load_p_mw = 2.24
load_q_mvar = 1.5

[lateral]
id = LAT9
host = B9
endpoint = B9R
toc = fuse_l
series_z1_ohm = 0.5+0.45j
series_z0_ohm = 1.6+1.3j
load_p_mw = 5.9
load_q_mvar = 3.32

[lateral]
id = LAT10
host = B10
endpoint = B10R
toc = fuse_m
series_z1_ohm = 0.8+0.7j
series_z0_ohm = 2.5+2.0j
load_p_mw = 1.8
load_q_mvar = 1.16

[lateral]
id = LAT11
host = B11
endpoint = B11R
toc = fuse_s
series_z1_ohm = 1.0+0.9j
series_z0_ohm = 3.1+2.6j
load_p_mw = 0.7
load_q_mvar = 0.36

[lateral]
id = LAT12
host = B12
endpoint = B12R
toc = fuse_s
series_z1_ohm = 1.0+0.9j
series_z0_ohm = 3.1+2.6j
load_p_mw = 1.22
load_q_mvar = 0.32

[lateral]
id = LAT13
host = B13
endpoint = B13R
toc = fuse_m
series_z1_ohm = 0.8+0.7j
series_z0_ohm = 2.5+2.0j
load_p_mw = 2.7
load_q_mvar = 1.16

[lateral]
id = LAT14
host = B14
endpoint = B14R
toc = fuse_m
series_z1_ohm = 0.8+0.7j
series_z0_ohm = 2.5+2.0j
load_p_mw = 2.98
load_q_mvar = 1.0

[source]
id = GRID6
bus = B6
kind = grid
ssc_mva = 400
x_over_r = 12
grounded_mv = true

[source]
id = GRID9
bus = B9
kind = grid
ssc_mva = 350
x_over_r = 12
grounded_mv = true

[source]
id = SG
bus = B6
kind = sync_gen
rated_mva = 60
xd_transient_pu = 0.22
grounded_mv = true

[toc]
id = fuse_s
points = 74:190.0, 90:69.771, 95.3:49.552, 131:10.18, 335.2:0.9178, 394.7:0.658, 530.8:0.3712, 666.6:0.2426, 968.7:0.127, 1124.3:0.0983, 3000:0.045

[toc]
id = fuse_m
points = 148:190.0, 180:69.771, 190.6:49.552, 262:10.18, 670.4:0.9178, 789.4:0.658, 1061.6:0.3712, 1333.2:0.2426, 1937.4:0.127, 2248.6:0.0983, 6000:0.045

[toc]
id = fuse_l
points = 296:190.0, 360:69.771, 381.2:49.552, 524:10.18, 1340.8:0.9178, 1578.8:0.658, 2123.2:0.3712, 2666.4:0.2426, 3874.8:0.127, 4497.2:0.0983, 12000:0.045
)";

}  // namespace

std::string mesh9_document() {
    return std::string(kMesh9Core) + "\n" + kMesh9BasePv + "\n" + kMesh9Sg + "\n" + kFuse30t;
}

std::string mesh9_iidg_document() {
    return std::string(kMesh9Core) + "\n" + kMesh9IidgPv + "\n" + kMesh9Iidg + "\n" + kFuse30t;
}

std::string ieee14_33kv_document() { return kIeee14; }

Network mesh9() { return parse_network(mesh9_document()); }
Network mesh9_iidg() { return parse_network(mesh9_iidg_document()); }
Network ieee14_33kv() { return parse_network(ieee14_33kv_document()); }

std::vector<std::string> builtin_names() { return {"mesh9", "mesh9-iidg", "ieee14-33kv"}; }

Network network_by_name_or_path(const std::string& arg) {
    if (arg == "mesh9") return mesh9();
    if (arg == "mesh9-iidg") return mesh9_iidg();
    if (arg == "ieee14-33kv") return ieee14_33kv();
    return load_network_file(arg);
}

}  // namespace builtin
}  // namespace meshprot
