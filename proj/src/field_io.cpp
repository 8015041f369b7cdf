#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "mimfd/errors.hpp"
#include "mimfd/fem.hpp"

namespace mimfd {

namespace {

double parse_double(std::string_view token, std::size_t line) {
    double value = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("field csv: cannot parse number '" + std::string(token) + "'", line);
    return value;
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const Mesh& mesh, const Field& field) {
    if (field.size() != mesh.node_count())
        throw DimensionError("write_field_csv: field has " + std::to_string(field.size()) + " values for " +
                             std::to_string(mesh.node_count()) + " nodes");
    std::ofstream out(path);
    if (!out) throw IoError("write_field_csv: cannot open " + path.string());
    out << "x,y,value\n";
    char buf[96];
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        const Point& p = mesh.nodes()[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, field[i]);
        out << buf;
    }
    if (!out) throw IoError("write_field_csv: write failed for " + path.string());
}

FieldCsv read_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_field_csv: cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("field csv: missing header", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,value") throw ParseError("field csv: expected header 'x,y,value'", lineno);

    FieldCsv out;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string_view rest(line);
        double cols[3];
        for (int c = 0; c < 3; ++c) {
            const auto comma = rest.find(',');
            if ((c < 2) != (comma != std::string_view::npos))
                throw ParseError("field csv: expected 3 comma-separated columns", lineno);
            cols[c] = parse_double(rest.substr(0, comma), lineno);
            if (c < 2) rest.remove_prefix(comma + 1);
        }
        out.coordinates.push_back({cols[0], cols[1]});
        values.push_back(cols[2]);
    }
    out.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
}

Field read_field_csv(const std::filesystem::path& path, const Mesh& mesh) {
    FieldCsv csv = read_field_csv(path);
    if (csv.values.size() != mesh.node_count())
        throw DimensionError("read_field_csv: " + path.string() + " has " + std::to_string(csv.values.size()) +
                             " rows, mesh has " + std::to_string(mesh.node_count()) + " nodes");
    const double tol = 1e-12 * std::max(mesh.domain().x1 - mesh.domain().x0, mesh.domain().y1 - mesh.domain().y0);
    for (std::size_t i = 0; i < csv.coordinates.size(); ++i) {
        const Point& p = mesh.nodes()[i];
        if (std::abs(p.x - csv.coordinates[i].x) > tol || std::abs(p.y - csv.coordinates[i].y) > tol)
            throw DimensionError("read_field_csv: coordinates of row " + std::to_string(i + 2) + " do not match node " +
                                 std::to_string(i));
    }
    return csv.values;
}

}  // namespace mimfd
