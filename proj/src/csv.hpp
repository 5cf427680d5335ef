#pragma once

// Minimal RFC 4180 reader/writer used by the corpus, truth and contingency
// formats. Quoted fields may span lines.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace scattermesh::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the row starts
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // False at end of input. Throws DataError on an unterminated quote.
    bool next(Row& row);

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace scattermesh::csv
