#include "rss/data_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace rss {

namespace {

long cell_of(const std::array<int, 3>& dims, const Coord& c) {
    return (static_cast<long>(c.z) * dims[1] + c.y) * dims[0] + c.x;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    return out;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
}

long parse_long(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw DataError("malformed header: bad " + what + " '" + s + "'");
    }
    if (used != s.size()) throw DataError("malformed header: bad " + what + " '" + s + "'");
    return v;
}

void check_header(const std::vector<std::string>& tok, const char* magic, std::size_t count,
                  const std::filesystem::path& path) {
    if (tok.size() != count || tok[0] != magic || tok[1] != "1")
        throw DataError("malformed header in " + path.string() + " (expected " + magic + " 1 ...)");
}

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

}  // namespace

VoxelMask::VoxelMask(std::array<int, 3> dims, std::vector<Coord> voxels)
    : dims_(dims), voxels_(std::move(voxels)) {
    for (int d : dims_)
        if (d <= 0) throw DataError("mask dims must be positive");
    lookup_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], -1);
    for (std::size_t j = 0; j < voxels_.size(); ++j) {
        const Coord& c = voxels_[j];
        if (!in_grid(c)) throw DataError("mask voxel outside grid dims");
        long& slot = lookup_[static_cast<std::size_t>(cell_of(dims_, c))];
        if (slot != -1) throw DataError("duplicate voxel coordinate in mask");
        slot = static_cast<long>(j);
    }
}

VoxelMask VoxelMask::full(std::array<int, 3> dims) {
    std::vector<Coord> v;
    v.reserve(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x) v.push_back({x, y, z});
    return VoxelMask(dims, std::move(v));
}

const Coord& VoxelMask::coord(Index j) const {
    if (j >= voxels_.size())
        throw std::out_of_range("voxel index " + std::to_string(j) + " out of range (p=" +
                                std::to_string(voxels_.size()) + ")");
    return voxels_[j];
}

bool VoxelMask::in_grid(const Coord& c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims_[0] && c.y < dims_[1] && c.z < dims_[2];
}

long VoxelMask::index_of(const Coord& c) const {
    if (!in_grid(c)) return -1;
    return lookup_[static_cast<std::size_t>(cell_of(dims_, c))];
}

Coord voxel_index_to_coord(const VoxelMask& mask, Index j) { return mask.coord(j); }

void Dataset::validate() const {
    if (X.rows() == 0) throw DataError("no samples");
    if (static_cast<Index>(y.size()) != n())
        throw DataError("dimension mismatch: " + std::to_string(y.size()) + " labels for " +
                        std::to_string(n()) + " rows");
    if (p() != mask.size())
        throw DataError("dimension mismatch: matrix has " + std::to_string(p()) + " columns, mask has " +
                        std::to_string(mask.size()) + " voxels");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw DataError("invalid label " + std::to_string(v));
    }
    if (!pos || !neg) throw DataError("both classes must be present");
    if (!X.allFinite()) throw DataError("non-finite value in sample matrix");
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.center_id != b.center_id || a.y != b.y || !(a.mask == b.mask)) return false;
    if (a.X.rows() != b.X.rows() || a.X.cols() != b.X.cols()) return false;
    return std::memcmp(a.X.data(), b.X.data(), sizeof(double) * static_cast<std::size_t>(a.X.size())) == 0;
}

void CenterCollection::validate() const {
    std::set<std::string> ids;
    for (const auto& d : datasets) {
        d.validate();
        if (!ids.insert(d.center_id).second) throw DataError("duplicate center id " + d.center_id);
        if (!(d.mask == datasets.front().mask)) throw DataError("centers do not share one mask");
    }
}

SupportSet::SupportSet(std::vector<Index> idx, Index universe) : indices(std::move(idx)), p(universe) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    if (!indices.empty() && indices.back() >= p) throw DataError("support index out of range");
}

bool SupportSet::contains(Index j) const { return std::binary_search(indices.begin(), indices.end(), j); }

SupportSet intersect(const SupportSet& a, const SupportSet& b) {
    std::vector<Index> out;
    std::set_intersection(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
                          std::back_inserter(out));
    return SupportSet(std::move(out), std::max(a.p, b.p));
}

double jaccard(const SupportSet& a, const SupportSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    const double inter = static_cast<double>(intersect(a, b).size());
    return inter / (static_cast<double>(a.size() + b.size()) - inter);
}

DatasetPaths DatasetPaths::from_prefix(const std::filesystem::path& prefix) {
    auto with = [&](const char* ext) {
        auto p = prefix;
        p += ext;
        return p;
    };
    return {with(".mat"), with(".labels"), with(".mask")};
}

Matrix read_matrix(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::string header;
    if (!std::getline(in, header)) throw DataError("malformed header: empty file " + path.string());
    auto tok = split_ws(header);
    check_header(tok, "RSSMAT", 4, path);
    const long n = parse_long(tok[2], "row count");
    const long p = parse_long(tok[3], "column count");
    if (n < 0 || p < 0) throw DataError("malformed header: negative dimension");

    // File is row-major; Eigen storage is column-major.
    Matrix X(n, p);
    std::vector<std::uint64_t> row(static_cast<std::size_t>(p));
    for (long i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 8));
        if (!in) throw DataError("truncated matrix payload in " + path.string());
        for (long j = 0; j < p; ++j) {
            const std::uint64_t bits = to_le(row[static_cast<std::size_t>(j)]);
            X(i, j) = std::bit_cast<double>(bits);
        }
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("trailing bytes after matrix payload in " + path.string());
    return X;
}

void write_matrix(const Matrix& X, const std::filesystem::path& path) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "RSSMAT 1 " << X.rows() << ' ' << X.cols() << '\n';
    std::vector<std::uint64_t> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            row[static_cast<std::size_t>(j)] = to_le(std::bit_cast<std::uint64_t>(X(i, j)));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 8));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<int> y;
    std::string line;
    while (std::getline(in, line)) {
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 1) throw DataError("invalid label line '" + line + "'");
        const long v = parse_long(tok[0], "label");
        if (v != 1 && v != -1) throw DataError("invalid label " + tok[0]);
        y.push_back(static_cast<int>(v));
    }
    return y;
}

void write_labels(const std::vector<int>& y, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (int v : y) out << v << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

VoxelMask read_mask(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("malformed header: empty file " + path.string());
    auto tok = split_ws(header);
    check_header(tok, "RSSMASK", 6, path);
    std::array<int, 3> dims{};
    for (int k = 0; k < 3; ++k) dims[static_cast<std::size_t>(k)] = static_cast<int>(parse_long(tok[2 + static_cast<std::size_t>(k)], "dim"));
    const long p = parse_long(tok[5], "voxel count");
    if (p < 0) throw DataError("malformed header: negative voxel count");
    std::vector<Coord> voxels;
    voxels.reserve(static_cast<std::size_t>(p));
    std::string line;
    while (static_cast<long>(voxels.size()) < p && std::getline(in, line)) {
        auto t = split_ws(line);
        if (t.empty()) continue;
        if (t.size() != 3) throw DataError("malformed mask line '" + line + "'");
        voxels.push_back({static_cast<int>(parse_long(t[0], "x")), static_cast<int>(parse_long(t[1], "y")),
                          static_cast<int>(parse_long(t[2], "z"))});
    }
    if (static_cast<long>(voxels.size()) != p) throw DataError("mask file has fewer voxels than its header");
    return VoxelMask(dims, std::move(voxels));
}

void write_mask(const VoxelMask& mask, const std::filesystem::path& path) {
    auto out = open_out(path);
    const auto& d = mask.dims();
    out << "RSSMASK 1 " << d[0] << ' ' << d[1] << ' ' << d[2] << ' ' << mask.size() << '\n';
    for (const auto& c : mask.voxels()) out << c.x << ' ' << c.y << ' ' << c.z << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

Dataset load_dataset(const DatasetPaths& paths) {
    Dataset d;
    d.center_id = paths.matrix.stem().string();
    d.X = read_matrix(paths.matrix);
    d.y = read_labels(paths.labels);
    d.mask = read_mask(paths.mask);
    d.validate();
    return d;
}

void save_dataset(const Dataset& d, const DatasetPaths& paths) {
    d.validate();
    write_matrix(d.X, paths.matrix);
    write_labels(d.y, paths.labels);
    write_mask(d.mask, paths.mask);
}

SupportSet read_support(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("malformed header: empty file " + path.string());
    auto tok = split_ws(header);
    check_header(tok, "RSSSUP", 4, path);
    const long p = parse_long(tok[2], "universe size");
    const long k = parse_long(tok[3], "support size");
    std::vector<Index> idx;
    std::string line;
    while (std::getline(in, line)) {
        auto t = split_ws(line);
        if (t.empty()) continue;
        const long v = parse_long(t[0], "index");
        if (v < 0) throw DataError("negative support index");
        idx.push_back(static_cast<Index>(v));
    }
    if (static_cast<long>(idx.size()) != k) throw DataError("support file count mismatch in " + path.string());
    return SupportSet(std::move(idx), static_cast<Index>(p));
}

void write_support(const SupportSet& s, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "RSSSUP 1 " << s.p << ' ' << s.size() << '\n';
    for (Index j : s.indices) out << j << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace rss
