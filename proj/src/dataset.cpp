#include "ipdc/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace ipdc {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::string cell_error(std::size_t row, std::size_t col, std::string_view what)
{
    std::ostringstream os;
    os << what << " at row " << row << ", column " << col;
    return os.str();
}

} // namespace

Dataset validate_dataset(Matrix x, Matrix y, std::vector<std::string> feature_names,
                         std::vector<std::string> response_names)
{
    if (x.rows() != y.rows()) {
        throw DataError("row count mismatch: x has " + std::to_string(x.rows()) + " rows, y has " +
                        std::to_string(y.rows()));
    }
    if (x.rows() < 3)
        throw DataError("need at least 3 observations, got " + std::to_string(x.rows()));
    if (x.cols() < 1 || y.cols() < 1)
        throw DataError("x and y need at least one column each");
    if (!x.allFinite())
        throw DataError("x contains non-finite entries");
    if (!y.allFinite())
        throw DataError("y contains non-finite entries");
    if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != x.cols())
        throw DataError("feature name count does not match column count");
    if (!response_names.empty() && static_cast<Index>(response_names.size()) != y.cols())
        throw DataError("response name count does not match column count");

    Dataset data;
    for (Index j = 0; j < x.cols(); ++j) {
        const auto col = x.col(j);
        if ((col.array() == col(0)).all())
            data.degenerate.push_back(static_cast<int>(j));
    }
    data.x = std::move(x);
    data.y = std::move(y);
    data.feature_names = std::move(feature_names);
    data.response_names = std::move(response_names);
    return data;
}

void GroundTruth::finalize()
{
    active_vars.clear();
    for (const auto& [k, l] : interaction_pairs) {
        if (!(k < l))
            throw std::invalid_argument("interaction pair indices must satisfy k < l");
        active_vars.insert(k);
        active_vars.insert(l);
    }
}

CsvMatrix parse_csv(const std::string& text, bool has_header)
{
    std::string_view rest(text);
    if (rest.substr(0, 3) == "\xEF\xBB\xBF")
        rest.remove_prefix(3);

    CsvMatrix out;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    bool header_pending = has_header;

    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        if (trim(line).empty())
            continue;

        const auto fields = split_fields(line);
        if (header_pending) {
            for (auto f : fields)
                out.names.emplace_back(f);
            cols = fields.size();
            header_pending = false;
            continue;
        }
        if (cols == 0)
            cols = fields.size();
        if (fields.size() != cols) {
            throw DataError("ragged row " + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto f = fields[c];
            double v = 0.0;
            const char* first = f.data();
            const char* last = f.data() + f.size();
            if (!f.empty() && *first == '+')
                ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (f.empty() || ec != std::errc() || ptr != last)
                throw DataError(cell_error(line_no, c + 1, "non-numeric cell '" + std::string(f) + "'"));
            if (!std::isfinite(v))
                throw DataError(cell_error(line_no, c + 1, "non-finite value '" + std::string(f) + "'"));
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0)
        throw DataError("empty file: no data rows");

    out.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out.values(static_cast<Index>(r), static_cast<Index>(c)) = values[r * cols + c];
    return out;
}

CsvMatrix load_csv(const std::filesystem::path& path, bool has_header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw DataError("read failure on '" + path.string() + "'");
    try {
        return parse_csv(buf.str(), has_header);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string to_csv(const Matrix& values, const std::vector<std::string>& names)
{
    std::string out;
    if (!names.empty()) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (c)
                out += ',';
            out += names[c];
        }
        out += '\n';
    }
    char buf[64];
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) {
            if (c)
                out += ',';
            const auto res = std::to_chars(buf, buf + sizeof(buf), values(r, c));
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

} // namespace ipdc
