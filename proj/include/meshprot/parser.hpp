#pragma once

#include <stdexcept>
#include <string>

#include "meshprot/network.hpp"

namespace meshprot {

/// Parse or validation failure; message carries line/field context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parse a network document (sections [network], [bus], [segment],
/// [lateral], [source], [toc]). Validates before returning.
Network parse_network(const std::string& document);

/// Parse the [scenario] section of a document. The document may also
/// contain network sections; they are ignored here.
Scenario parse_scenario(const std::string& document);

/// Render a network back to document form. parse_network(render_network(n))
/// reproduces n exactly.
std::string render_network(const Network& n);

Network load_network_file(const std::string& path);
Scenario load_scenario_file(const std::string& path);

}  // namespace meshprot
