#include <iostream>

#include "commands.hpp"
#include "common.hpp"
#include "disagg/graph.hpp"

namespace disagg::cli {

int cmd_split(const SplitArgs& args) {
  const CompGraph graph = load_graph_file(args.graph).scaled(args.batch);
  const std::vector<ModelSlice> slices = slice_model(graph);
  write_json(args.out, slices_to_json(graph, slices));
  if (!args.out.empty() && args.out != "-")
    std::cout << slices.size() << " slices ("
              << (slices.empty() ? 0 : slices.size() - 1) << " attention boundaries) -> "
              << args.out << '\n';
  return 0;
}

}  // namespace disagg::cli
