#pragma once

#include <string>

#include "ckgen/graph.hpp"

namespace fixtures {

inline std::string data(const std::string& name) { return std::string(CKGEN_TEST_DATA) + "/" + name; }

inline ckgen::DirectedGraph graph(const std::string& name) { return ckgen::load_graph(data(name + ".json")); }

}  // namespace fixtures
