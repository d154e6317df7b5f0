#include "rss/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace rss {

void write_voxel_csv(const VoxelMask& mask, const Vector& scores, const SupportSet& selected, std::ostream& out) {
    if (static_cast<Index>(scores.size()) != mask.size()) throw DataError("score length does not match mask");
    out << "index,x,y,z,score,selected\n" << std::setprecision(17);
    for (Index j = 0; j < mask.size(); ++j) {
        const Coord& c = mask.coord(j);
        out << j << ',' << c.x << ',' << c.y << ',' << c.z << ',' << scores(static_cast<Eigen::Index>(j)) << ','
            << (selected.contains(j) ? 1 : 0) << '\n';
    }
}

void write_overlap_csv(const OverlapResult& r, std::ostream& out) {
    out << "S,count\n";
    for (const auto& [level, s] : r.support_at) out << level << ',' << s.size() << '\n';
}

std::vector<std::filesystem::path> write_pgm_slices(const VoxelMask& mask, const Vector& scores,
                                                    const std::filesystem::path& dir, const std::string& stem) {
    if (static_cast<Index>(scores.size()) != mask.size()) throw DataError("score length does not match mask");
    const auto& d = mask.dims();
    const double top = scores.size() ? scores.cwiseAbs().maxCoeff() : 0.0;
    std::vector<std::filesystem::path> written;
    for (int z = 0; z < d[2]; ++z) {
        std::vector<unsigned char> pix(static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]), 0);
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const long j = mask.index_of({x, y, z});
                if (j < 0 || top == 0.0) continue;
                const double v = std::abs(scores(j)) / top;
                pix[static_cast<std::size_t>(y) * static_cast<std::size_t>(d[0]) + static_cast<std::size_t>(x)] =
                    static_cast<unsigned char>(std::lround(255.0 * v));
            }
        char name[64];
        std::snprintf(name, sizeof name, "_z%03d.pgm", z);
        const auto path = dir / (stem + name);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + path.string() + " for writing");
        out << "P5\n" << d[0] << ' ' << d[1] << "\n255\n";
        out.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
        if (!out) throw DataError("write failed: " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace rss
