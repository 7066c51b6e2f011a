#ifndef CIDS_TOOLS_SVG_HPP
#define CIDS_TOOLS_SVG_HPP

#include <string>
#include <utility>
#include <vector>

#include <cids/csv.hpp>

namespace cids::app {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::vector<Series> series;
};

/// One panel per non-index column, one series per table. Tables must carry
/// the training-curve or regret header; anything else throws CsvParseError.
std::vector<Panel> panels_from_tables(const std::vector<std::pair<std::string, CsvTable>>& labelled);

/// Standalone SVG with the panels stacked vertically. Non-finite points are
/// skipped. Identical input gives identical bytes.
std::string render_svg(const std::vector<Panel>& panels);

} // namespace cids::app

#endif
