#pragma once

#include <string>
#include <vector>

#include "meshprot/network.hpp"

namespace meshprot {
namespace builtin {

/// 20 kV / 50 Hz meshed overhead system: nine main buses fed from
/// substation bus B10 through a double loop plus an interconnection
/// segment, one fused lateral per main bus, synchronous and PV generation.
std::string mesh9_document();

/// mesh9 with the synchronous units replaced by PV units of the same
/// rating, for fully inverter-based islanded studies.
std::string mesh9_iidg_document();

/// 33 kV / 60 Hz meshed system modeled after the distribution-level part
/// of a standard 14-bus test case, fed from two grid transformers with a
/// synchronous machine for islanded operation.
std::string ieee14_33kv_document();

Network mesh9();
Network mesh9_iidg();
Network ieee14_33kv();

/// Resolve a --network argument: a built-in name or a file path.
Network network_by_name_or_path(const std::string& arg);

std::vector<std::string> builtin_names();

}  // namespace builtin
}  // namespace meshprot
