#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "rydion/constants.hpp"

namespace rydion {

// Quantum defects keyed by (l, 2j). Missing entries fall back to the
// hydrogenic value delta = 0. An optional delta2 term adds the usual
// n-dependent Rydberg-Ritz correction delta = delta0 + delta2/(n-delta0)^2.
class QuantumDefectTable {
public:
    struct Entry {
        double delta0 = 0.0;
        double delta2 = 0.0;
    };

    QuantumDefectTable() = default;
    explicit QuantumDefectTable(std::string species_label)
        : label_(std::move(species_label)) {}

    void set(int l, double j, double delta0, double delta2 = 0.0) {
        if (delta0 < 0.0)
            throw std::invalid_argument("quantum defect must be >= 0");
        entries_[key(l, j)] = Entry{delta0, delta2};
    }

    // Effective defect for (n, l, j); hydrogenic (0) when unknown.
    double defect(int n, int l, double j) const {
        auto it = entries_.find(key(l, j));
        if (it == entries_.end()) return 0.0;
        const auto& e = it->second;
        const double nd = static_cast<double>(n) - e.delta0;
        return e.delta0 + (nd > 0 ? e.delta2 / (nd * nd) : 0.0);
    }

    bool has(int l, double j) const { return entries_.count(key(l, j)) > 0; }
    const std::string& label() const { return label_; }
    std::size_t size() const { return entries_.size(); }

    // File format: one record per line,
    //   species l 2j delta0 [delta2] [# comment]
    // '#' starts a comment, blank lines ignored.
    static QuantumDefectTable load(const std::string& path, const std::string& species) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open defect table: " + path);
        QuantumDefectTable table(species);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            std::string name;
            int l, twoj;
            double d0;
            if (!(ss >> name >> l >> twoj >> d0)) continue;
            if (name != species) continue;
            double d2 = 0.0;
            ss >> d2;
            table.set(l, 0.5 * twoj, d0, d2);
        }
        return table;
    }

private:
    static std::pair<int, int> key(int l, double j) {
        return {l, static_cast<int>(std::lround(2.0 * j))};
    }
    std::map<std::pair<int, int>, Entry> entries_;
    std::string label_;
};

struct Species {
    std::string name;
    double mass = 0.0;    // kg
    int charge = 0;       // in units of e, 0 or +1
    QuantumDefectTable defects; // atoms only

    Species() = default;
    Species(std::string n, double m, int q, QuantumDefectTable d = {})
        : name(std::move(n)), mass(m), charge(q), defects(std::move(d)) {
        if (mass <= 0.0) throw std::invalid_argument("mass must be > 0");
        if (charge != 0 && charge != 1)
            throw std::invalid_argument("charge must be 0 or +1");
    }

    double core_mass() const { return mass - constants::m_electron; }
    // electron-core reduced mass
    double reduced_mass() const {
        const double mc = core_mass();
        return constants::m_electron * mc / (constants::m_electron + mc);
    }
    // mass-corrected Rydberg constant, 1/m
    double rydberg_constant() const {
        return constants::rydberg_inf /
               (1.0 + constants::m_electron / core_mass());
    }
};

inline QuantumDefectTable lithium_defects() {
    // Li literature values; s and p from Goy-type spectroscopy, d small.
    QuantumDefectTable t("Li");
    t.set(0, 0.5, 0.3995101, 0.029);
    t.set(1, 0.5, 0.0471835, -0.024);
    t.set(1, 1.5, 0.0471720, -0.024);
    t.set(2, 1.5, 0.002129, 0.0);
    t.set(2, 2.5, 0.002129, 0.0);
    return t;
}

inline Species make_li6() { return Species("6Li", constants::mass_li6, 0, lithium_defects()); }
inline Species make_li7() { return Species("7Li", constants::mass_li7, 0, lithium_defects()); }
inline Species make_yb171_ion() { return Species("171Yb+", constants::mass_yb171, 1); }

// Test species with effectively infinite core mass; reduced mass = m_e and
// energies are exactly -R_inf h c / n^2.
inline Species make_hydrogenic() {
    return Species("H", 1.0e6 * constants::amu, 0);
}

inline double atom_ion_reduced_mass(const Species& atom, const Species& ion) {
    return atom.mass * ion.mass / (atom.mass + ion.mass);
}

} // namespace rydion
