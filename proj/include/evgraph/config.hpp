#pragma once

#include "evgraph/errors.hpp"
#include "evgraph/experiments.hpp"
#include "evgraph/wan.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace evgraph {

/// A malformed or out-of-range configuration. what() reads "<source>:<line>: <message>",
/// or "<source>: <message>" when no single line is at fault.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& source, Index line, const std::string& message);

    const std::string& source() const { return source_; }
    Index line() const { return line_; } ///< 0 when no line applies

private:
    std::string source_;
    Index line_;
};

/// Flat `key = value` text. '#' starts a comment anywhere on a line; blank lines are
/// skipped; keys are [a-z0-9_]+ and may appear once. Every typed getter marks its key
/// as consumed so finish() can reject keys nobody asked for.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, std::string source,
                                std::filesystem::path base_dir = {});
    /// Throws ConfigError naming the path when the file cannot be read.
    static KeyValueConfig load(const std::filesystem::path& path);

    const std::string& source() const { return source_; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::optional<std::string> get_string(const std::string& key);
    std::optional<Index> get_int(const std::string& key);
    std::optional<std::uint64_t> get_uint64(const std::string& key);
    std::optional<double> get_double(const std::string& key);
    /// true/false, yes/no, on/off, 1/0.
    std::optional<bool> get_bool(const std::string& key);
    /// Relative paths resolve against the config file's directory; the path must exist.
    std::optional<std::filesystem::path> get_path(const std::string& key);

    /// Sets or replaces a value (command-line overrides); line 0.
    void set(const std::string& key, std::string value);

    /// Throws ConfigError at the first key that no getter consumed.
    void finish() const;

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;
    [[noreturn]] void fail(const std::string& message) const;

private:
    struct Entry {
        std::string value;
        Index line = 0;
        bool used = false;
    };
    const Entry* take(const std::string& key);

    std::string source_;
    std::filesystem::path base_dir_;
    std::map<std::string, Entry> entries_;
};

/// Source-localization keys. `full_scale = true` switches to 10000 training samples and
/// 10 x 10 realizations before the explicit keys apply.
SourceLocConfig source_loc_config(KeyValueConfig& kv);

struct AuthorSettings {
    AuthorConfig config;
    std::optional<std::filesystem::path> corpus;         ///< `corpus` key
    std::optional<std::filesystem::path> function_words; ///< unset: the shipped list
};

AuthorSettings author_settings(KeyValueConfig& kv);

/// One `key = value` line per resolved setting, in a fixed order.
std::string describe(const SourceLocConfig& cfg);
std::string describe(const AuthorSettings& s);

/// Logical cores, at least 1.
Index default_workers();

} // namespace evgraph
