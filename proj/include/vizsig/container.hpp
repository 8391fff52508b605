#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vizsig {

/// Binary container of named sections, shared by PCA and classifier models.
///
/// Layout (little endian): "VSIC", u8 version (=1), u32 section count, then per
/// section: u16 name length, name bytes, u8 kind, and
///   kind 0 (matrix):  u32 rows, u32 cols, rows*cols f64 row-major;
///   kind 1 (strings): u32 count, then count x (u16 length, UTF-8 bytes).
/// Sections are written in name order so output bytes are canonical.
class LabeledContainer {
public:
    void put(const std::string& name, Eigen::MatrixXd matrix);
    void put_strings(const std::string& name, std::vector<std::string> values);

    bool has(const std::string& name) const;
    const Eigen::MatrixXd& matrix(const std::string& name) const;
    const std::vector<std::string>& strings(const std::string& name) const;

    void save(const std::filesystem::path& path) const;
    static LabeledContainer load(const std::filesystem::path& path);

private:
    std::map<std::string, Eigen::MatrixXd> matrices_;
    std::map<std::string, std::vector<std::string>> strings_;
};

}  // namespace vizsig
