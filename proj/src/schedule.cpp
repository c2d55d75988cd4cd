#include "csisense/schedule.hpp"

#include "csisense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace csisense {

void SymbolSchedule::validate() const {
    if (k_all <= 0)
        throw InvalidSchedule("k_all must be positive");
    if (!(t0 > 0.0) || !std::isfinite(t0))
        throw InvalidSchedule("symbol interval must be positive");
    if (phi.empty())
        throw InvalidSchedule("schedule is empty");
    if (phi.size() > static_cast<std::size_t>(k_all))
        throw InvalidSchedule("schedule has more symbols than k_all");
    for (std::size_t k = 0; k < phi.size(); ++k) {
        if (phi[k] < 0 || phi[k] > k_all - 1)
            throw InvalidSchedule("symbol index " + std::to_string(phi[k]) + " outside [0, k_all-1]");
        if (k > 0 && phi[k] <= phi[k - 1])
            throw InvalidSchedule("symbol indices must be strictly increasing");
    }
}

bool SymbolSchedule::is_center_symmetric() const noexcept {
    const std::size_t n = phi.size();
    if (n == 0 || n % 2 != 0)
        return false;
    for (std::size_t k = 0; k < n; ++k)
        if (phi[k] + phi[n - 1 - k] != k_all - 1)
            return false;
    return true;
}

std::vector<double> SymbolSchedule::half() const {
    std::vector<double> out(phi.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = phi[k];
    return out;
}

SymbolSchedule SymbolSchedule::contiguous(int k, double t0) {
    SymbolSchedule s;
    s.phi.resize(static_cast<std::size_t>(k));
    std::iota(s.phi.begin(), s.phi.end(), 0);
    s.k_all = k;
    s.t0 = t0;
    return s;
}

IndexMoments index_moments(std::span<const int> phi) {
    const double n = static_cast<double>(phi.size());
    double s1 = 0.0;
    double s2 = 0.0;
    for (int p : phi) {
        s1 += p;
        s2 += static_cast<double>(p) * p;
    }
    return {s1 / n, s2 / n};
}

void write_schedule(std::ostream& os, const SymbolSchedule& schedule) {
    os << "# k_all=" << schedule.k_all << '\n';
    os << "# K=" << schedule.phi.size() << '\n';
    os << "# T0_s=" << std::setprecision(17) << schedule.t0 << '\n';
    for (int p : schedule.phi)
        os << p << '\n';
}

SymbolSchedule read_schedule(std::istream& is) {
    SymbolSchedule s;
    s.k_all = -1;
    s.t0 = -1.0;
    long declared_k = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        if (line[first] == '#') {
            const std::string body = line.substr(first + 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                continue;
            std::string key = body.substr(0, eq);
            key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
            const std::string value = body.substr(eq + 1);
            try {
                if (key == "k_all")
                    s.k_all = std::stoi(value);
                else if (key == "K")
                    declared_k = std::stol(value);
                else if (key == "T0_s")
                    s.t0 = std::stod(value);
            } catch (const std::exception&) {
                throw InvalidSchedule("bad header value on line " + std::to_string(lineno));
            }
            continue;
        }
        std::istringstream ls(line);
        long v = 0;
        std::string rest;
        if (!(ls >> v) || (ls >> rest))
            throw InvalidSchedule("expected one integer on line " + std::to_string(lineno));
        s.phi.push_back(static_cast<int>(v));
    }
    if (s.k_all < 0)
        throw InvalidSchedule("missing '# k_all=' header");
    if (s.t0 < 0.0)
        throw InvalidSchedule("missing '# T0_s=' header");
    if (declared_k >= 0 && static_cast<std::size_t>(declared_k) != s.phi.size())
        throw InvalidSchedule("'# K=' header does not match the number of indices");
    s.validate();
    return s;
}

void save_schedule(const std::string& path, const SymbolSchedule& schedule) {
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    write_schedule(os, schedule);
    if (!os)
        throw IoError("write failed for '" + path + "'");
}

SymbolSchedule load_schedule(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open schedule file '" + path + "'");
    return read_schedule(is);
}

SymbolSchedule random_schedule(int k_all, int k, double t0, std::uint64_t seed) {
    if (k < 1 || k > k_all)
        throw InvalidSize("random schedule needs 1 <= K <= k_all");
    std::vector<int> all(static_cast<std::size_t>(k_all));
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(seed);
    std::vector<int> pick;
    pick.reserve(static_cast<std::size_t>(k));
    std::sample(all.begin(), all.end(), std::back_inserter(pick), k, rng);
    std::sort(pick.begin(), pick.end());
    SymbolSchedule s;
    s.phi = std::move(pick);
    s.k_all = k_all;
    s.t0 = t0;
    return s;
}

} // namespace csisense
