#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace radnet {

// ============================================================================
// CSV output for experiment results and input for the localizer
// ============================================================================

/// Shortest-ish round-trippable number formatting ("%.12g").
inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_results_csv(std::ostream& out, const std::string& variant, double snr_db,
                              int n_particles, const std::vector<ResultRow>& rows) {
    out << "variant,snr_db,n_particles,run,scan,gospa,loc_err,missed,false\n";
    for (const ResultRow& r : rows)
        out << variant << ',' << fmt_num(snr_db) << ',' << n_particles << ',' << r.run << ','
            << r.scan << ',' << fmt_num(r.gospa_m) << ',' << fmt_num(r.localization_m) << ','
            << fmt_num(r.missed_m) << ',' << fmt_num(r.false_m) << '\n';
}

/// Per-scan means across runs. The mgospa column is the mean metric value in
/// meters; the decomposition columns are p-th roots of the mean p-power
/// terms, so they are in meters as well.
inline void write_summary_csv(std::ostream& out, const std::string& variant, double snr_db,
                              int n_particles, const MgospaCurve& curve, double order) {
    const double invp = 1.0 / order;
    out << "variant,snr_db,n_particles,scan,mgospa,loc_err,missed,false\n";
    for (std::size_t k = 0; k < curve.value.size(); ++k)
        out << variant << ',' << fmt_num(snr_db) << ',' << n_particles << ',' << k + 1 << ','
            << fmt_num(curve.value[k]) << ',' << fmt_num(std::pow(curve.localization_p[k], invp))
            << ',' << fmt_num(std::pow(curve.missed_p[k], invp)) << ','
            << fmt_num(std::pow(curve.false_p[k], invp)) << '\n';
}

inline void write_tracks_csv(std::ostream& out, const std::vector<TrackRow>& rows) {
    out << "run,scan,label,existence,x,y,z,vx,vy,vz\n";
    for (const TrackRow& r : rows)
        out << r.run << ',' << r.scan << ',' << r.label << ',' << fmt_num(r.existence) << ','
            << fmt_num(r.state.position_m.x) << ',' << fmt_num(r.state.position_m.y) << ','
            << fmt_num(r.state.position_m.z) << ',' << fmt_num(r.state.velocity_mps.x) << ','
            << fmt_num(r.state.velocity_mps.y) << ',' << fmt_num(r.state.velocity_mps.z) << '\n';
}

inline void write_scans_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
    out << "run,scan,receiver,range_m\n";
    for (const ScanRow& r : rows)
        out << r.run << ',' << r.scan << ',' << r.receiver << ',' << fmt_num(r.range_m) << '\n';
}

inline void write_fusion_diag_csv(std::ostream& out, const std::vector<FusionDiagnostic>& rows) {
    out << "scan,label,mode,skipped,n_measurements,n_replaced,objective,active_constraints,"
           "converged\n";
    for (const FusionDiagnostic& d : rows)
        out << d.scan << ',' << d.label << ',' << (d.mode == FusionMode::ad ? "ad" : "nad") << ','
            << (d.skipped ? 1 : 0) << ',' << d.n_measurements << ',' << d.n_replaced << ','
            << fmt_num(d.objective) << ',' << d.active_constraints << ',' << (d.converged ? 1 : 0)
            << '\n';
}

/// Input rows for the one-shot localizer: receiver,range_m[,sigma_m].
/// Receiver indices are 1-based in the file. A header line is optional.
struct MeasurementRow {
    int receiver = 0;
    double range_m = 0.0;
    double sigma_m = 0.0;  // 0 means "not given"
};

inline std::vector<MeasurementRow> read_measurement_csv(std::istream& in) {
    std::vector<MeasurementRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = line;
        if (const auto cut = s.find('#'); cut != std::string::npos) s = s.substr(0, cut);
        bool blank = true;
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;
        std::vector<std::string> fields;
        std::istringstream fs(s);
        std::string f;
        while (std::getline(fs, f, ',')) fields.push_back(f);
        bool header = false;  // any alphabetic first field is a header line
        for (char c : fields[0])
            if (std::isalpha(static_cast<unsigned char>(c))) header = true;
        if (header) continue;
        if (fields.size() < 2 || fields.size() > 3)
            throw std::runtime_error("measurement csv line " + std::to_string(line_no) +
                                     ": expected receiver,range_m[,sigma_m]");
        MeasurementRow r;
        try {
            r.receiver = std::stoi(fields[0]);
            r.range_m = std::stod(fields[1]);
            if (fields.size() == 3) r.sigma_m = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::runtime_error("measurement csv line " + std::to_string(line_no) +
                                     ": bad number");
        }
        if (r.receiver < 1)
            throw std::runtime_error("measurement csv line " + std::to_string(line_no) +
                                     ": receiver indices are 1-based");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace radnet
