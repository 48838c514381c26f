#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rubricrank {

// Streams a line-delimited JSON file. Blank lines and lines starting with '#'
// are skipped; fn receives the parsed object and its 1-based line number.
// Malformed lines raise ParseError.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

// Writes one JSON object per line after an optional '#' header comment.
class JsonlWriter {
public:
    JsonlWriter(const std::filesystem::path& path, std::string_view header_comment);

    void write(const nlohmann::ordered_json& record);
    std::size_t count() const { return count_; }
    // Flushes and closes; throws Error(IoError) if any write failed.
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t count_ = 0;
};

// Strips one trailing "\n" or "\r\n".
std::string trim_trailing_newline(std::string text);

// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);

}  // namespace rubricrank
