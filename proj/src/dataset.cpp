#include "lesionkit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "lesionkit/errors.hpp"
#include "lesionkit/rng.hpp"

namespace fs = std::filesystem;

namespace lesionkit {

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        default: return "unassigned";
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw FormatError("unknown split tag: " + s);
}

int Manifest::class_index(const std::string& label) const {
    const auto it = std::find(classes.begin(), classes.end(), label);
    return it == classes.end() ? -1
                               : static_cast<int>(it - classes.begin());
}

void Manifest::validate() const {
    std::set<std::string> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.path).second) {
            throw DatasetError("duplicate path in manifest: " + rec.path);
        }
        if (class_index(rec.label) < 0) {
            throw DatasetError("label not in class list: " + rec.label);
        }
    }
    std::set<std::string> unique_classes(classes.begin(), classes.end());
    if (unique_classes.size() != classes.size()) {
        throw DatasetError("duplicate class names in manifest");
    }
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

Manifest ingest_directory(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw DatasetError("dataset root is not a directory: " + root.string());
    }

    std::vector<std::string> stray;  // image files not under a class directory
    std::vector<std::string> class_names;
    Manifest m;

    std::vector<fs::directory_entry> entries{fs::directory_iterator(root),
                                             fs::directory_iterator()};
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path() < b.path(); });

    for (const auto& entry : entries) {
        if (entry.is_directory()) {
            class_names.push_back(entry.path().filename().string());
        } else if (has_image_extension(entry.path())) {
            stray.push_back(entry.path().string());
        }
    }

    if (!stray.empty()) {
        std::string msg = "image files outside any class directory:";
        for (const auto& p : stray) msg += "\n  " + p;
        throw DatasetError(msg);
    }
    if (class_names.empty()) {
        throw DatasetError("no class directories under " + root.string());
    }

    std::sort(class_names.begin(), class_names.end());
    m.classes = class_names;

    for (const auto& cls : class_names) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(root / cls)) {
            if (entry.is_regular_file() && has_image_extension(entry.path())) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            m.records.push_back({f.string(), cls, Split::unassigned});
        }
    }

    if (m.records.empty()) {
        throw DatasetError("no image files under " + root.string());
    }
    std::sort(m.records.begin(), m.records.end(),
              [](const auto& a, const auto& b) { return a.path < b.path; });
    return m;
}

std::vector<std::size_t> apportion_test_counts(
    const std::vector<std::size_t>& class_sizes, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DatasetError("test fraction must lie in (0,1)");
    }
    const std::size_t total =
        std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
    if (total == 0) throw DatasetError("cannot split an empty manifest");
    for (std::size_t n : class_sizes) {
        if (n == 0) throw DatasetError("cannot split a class with zero samples");
    }

    const auto test_total = static_cast<std::size_t>(
        std::ceil(test_fraction * static_cast<double>(total)));

    // Largest-remainder apportionment, all in exact integer arithmetic:
    // quota_c = test_total * n_c / total.
    std::vector<std::size_t> counts(class_sizes.size(), 0);
    std::vector<std::pair<std::uint64_t, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        const std::uint64_t numer =
            static_cast<std::uint64_t>(test_total) * class_sizes[c];
        counts[c] = numer / total;
        remainders.emplace_back(numer % total, c);
        assigned += counts[c];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // tie: earlier class first
    });
    for (std::size_t i = 0; assigned < test_total; ++i, ++assigned) {
        counts[remainders[i].second] += 1;
    }
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        if (counts[c] > class_sizes[c]) {
            // Can only happen for extreme fractions; push the overflow onto
            // the largest class that still has room.
            std::size_t excess = counts[c] - class_sizes[c];
            counts[c] = class_sizes[c];
            for (std::size_t o = 0; o < counts.size() && excess > 0; ++o) {
                const std::size_t room = class_sizes[o] - counts[o];
                const std::size_t take = std::min(room, excess);
                counts[o] += take;
                excess -= take;
            }
        }
    }
    return counts;
}

Manifest stratified_split(const Manifest& m, const SplitSpec& spec) {
    m.validate();

    std::vector<std::vector<std::size_t>> members(m.classes.size());
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        members[m.class_index(m.records[i].label)].push_back(i);
    }
    std::vector<std::size_t> sizes(m.classes.size());
    for (std::size_t c = 0; c < members.size(); ++c) sizes[c] = members[c].size();

    const std::vector<std::size_t> test_counts =
        apportion_test_counts(sizes, spec.test_fraction);

    Manifest out = m;
    Rng rng(spec.seed);
    for (std::size_t c = 0; c < members.size(); ++c) {
        rng.shuffle(members[c]);
        for (std::size_t i = 0; i < members[c].size(); ++i) {
            out.records[members[c][i]].split =
                i < test_counts[c] ? Split::test : Split::train;
        }
    }
    return out;
}

SplitStats stats(const Manifest& m) {
    SplitStats st;
    std::map<std::string, SplitStats::Row> rows;
    for (const auto& cls : m.classes) rows[cls].label = cls;
    for (const auto& rec : m.records) {
        auto& row = rows[rec.label];
        switch (rec.split) {
            case Split::train: ++row.train; break;
            case Split::test: ++row.test; break;
            default: ++row.unassigned; break;
        }
        ++st.total;
    }
    for (const auto& cls : m.classes) st.rows.push_back(rows[cls]);
    return st;
}

std::string SplitStats::to_csv() const {
    std::ostringstream out;
    out << "label,train,test,unassigned,total\n";
    for (const auto& row : rows) {
        out << row.label << ',' << row.train << ',' << row.test << ','
            << row.unassigned << ',' << row.total() << '\n';
    }
    return out.str();
}

namespace {

// RFC 4180 quoting, applied only when needed so plain manifests stay diffable.
std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_manifest_csv(const Manifest& m, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "path,label,split\n";
    for (const auto& rec : m.records) {
        out << csv_escape(rec.path) << ',' << csv_escape(rec.label) << ','
            << to_string(rec.split) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Manifest read_manifest_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());

    std::string line;
    if (!std::getline(in, line) || (line != "path,label,split" &&
                                    line != "path,label,split\r")) {
        throw FormatError("manifest missing `path,label,split` header: " +
                          path.string());
    }
    Manifest m;
    std::set<std::string> class_set;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = csv_split_line(line);
        if (fields.size() != 3) {
            throw FormatError("manifest row with " +
                              std::to_string(fields.size()) + " fields: " + line);
        }
        m.records.push_back({fields[0], fields[1], split_from_string(fields[2])});
        class_set.insert(fields[1]);
    }
    m.classes.assign(class_set.begin(), class_set.end());
    m.validate();
    return m;
}

}  // namespace lesionkit
