#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lesionkit {

enum class Split { unassigned, train, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct SampleRecord {
    std::string path;
    std::string label;
    Split split = Split::unassigned;
};

// Labeled-sample catalog. `classes` keeps the ordered unique class names;
// every record's label is one of them and paths are unique.
struct Manifest {
    std::vector<SampleRecord> records;
    std::vector<std::string> classes;

    int class_index(const std::string& label) const;  // -1 when unknown
    void validate() const;
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

// One record per image file under root/<class>/, label taken from the
// subdirectory name, records in lexicographic path order. Accepts
// .png/.jpg/.jpeg (case-insensitive). Throws DatasetError for an empty
// tree or image files sitting outside a class directory.
Manifest ingest_directory(const std::filesystem::path& root);

// Deterministic stratified holdout. The total test count is
// ceil(test_fraction × N); per-class test counts follow largest-remainder
// apportionment of that total proportional to class sizes; membership
// within a class comes from a seeded shuffle. Throws DatasetError when a
// class has no samples or the fraction leaves (0,1).
Manifest stratified_split(const Manifest& m, const SplitSpec& spec);

// Test-set sizes per class for the apportionment above, exposed for
// callers that only need the counts.
std::vector<std::size_t> apportion_test_counts(
    const std::vector<std::size_t>& class_sizes, double test_fraction);

struct SplitStats {
    struct Row {
        std::string label;
        std::size_t train = 0;
        std::size_t test = 0;
        std::size_t unassigned = 0;
        std::size_t total() const { return train + test + unassigned; }
    };
    std::vector<Row> rows;  // in class order
    std::size_t total = 0;

    std::string to_csv() const;
};

SplitStats stats(const Manifest& m);

// CSV persistence: header `path,label,split`, UTF-8, LF line endings.
void write_manifest_csv(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest_csv(const std::filesystem::path& path);

}  // namespace lesionkit
