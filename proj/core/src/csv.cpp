#include "mbjm/csv.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace mbjm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == ".";
}

double parse_double(const std::string& s, int line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        std::ostringstream os;
        os << "line " << line_no << ": cannot parse '" << s << "' in column " << col;
        throw ParseError(os.str());
    }
}

}  // namespace

LongitudinalDataset load_csv_long(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load_csv_long(in, schema);
}

LongitudinalDataset load_csv_long(std::istream& in, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_line(line);

    auto col_index = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError("missing column: " + name);
        return (std::size_t)(it - header.begin());
    };

    const std::size_t c_id = col_index(schema.subject_id_col);
    const std::size_t c_time = col_index(schema.time_col);
    const std::size_t c_etime = col_index(schema.event_time_col);
    const std::size_t c_eind = col_index(schema.event_indicator_col);
    std::vector<std::size_t> c_cov, c_bio;
    for (const auto& c : schema.covariate_cols) c_cov.push_back(col_index(c));
    for (const auto& b : schema.biomarkers) c_bio.push_back(col_index(b.name));

    LongitudinalDataset ds;
    ds.covariate_names = schema.covariate_cols;
    ds.biomarker_specs = schema.biomarkers;

    std::map<std::string, std::size_t> subject_pos;  // id -> index, first-seen order kept below
    std::vector<SubjectRecord> subjects;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << "line " << line_no << ": expected " << header.size() << " cells, got "
               << cells.size();
            throw ParseError(os.str());
        }

        const std::string id = cells[c_id];
        const double t = parse_double(cells[c_time], line_no, schema.time_col) * schema.time_rescale;
        const double T =
            parse_double(cells[c_etime], line_no, schema.event_time_col) * schema.time_rescale;
        const double delta = parse_double(cells[c_eind], line_no, schema.event_indicator_col);
        if (delta != 0.0 && delta != 1.0)
            throw ValidationError("subject " + id + ": event indicator not in {0,1}");
        if (t >= T) {
            std::ostringstream os;
            os << "subject " << id << ": visit time " << t << " >= event time " << T;
            throw ValidationError(os.str());
        }

        auto [it, inserted] = subject_pos.try_emplace(id, subjects.size());
        if (inserted) {
            SubjectRecord rec;
            rec.subject_id = id;
            rec.observed_time = T;
            rec.event_indicator = (int)delta;
            for (auto c : c_cov)
                rec.covariates.push_back(parse_double(cells[c], line_no, "covariate"));
            subjects.push_back(std::move(rec));
        }
        SubjectRecord& rec = subjects[it->second];

        VisitRow row;
        row.time = t;
        row.values.resize(schema.biomarkers.size());
        for (std::size_t m = 0; m < c_bio.size(); ++m) {
            const std::string& cell = cells[c_bio[m]];
            if (is_missing(cell)) continue;
            double raw = parse_double(cell, line_no, schema.biomarkers[m].name);
            if (schema.biomarkers[m].kind == BiomarkerKind::CategoricalBinary) {
                if (raw != 0.0 && raw != 1.0)
                    throw ValidationError("subject " + id + ": categorical biomarker " +
                                          schema.biomarkers[m].name + " not in {0,1}");
                row.values[m] = raw;
            } else {
                row.values[m] = schema.biomarkers[m].transform.apply(raw);
            }
        }
        rec.visits.push_back(std::move(row));
    }

    for (auto& rec : subjects)
        std::sort(rec.visits.begin(), rec.visits.end(),
                  [](const VisitRow& a, const VisitRow& b) { return a.time < b.time; });

    ds.subjects = std::move(subjects);
    return ds;
}

void export_csv_long(const LongitudinalDataset& ds, std::ostream& out) {
    out << "subject_id,time,event_time,event_indicator";
    for (const auto& c : ds.covariate_names) out << "," << c;
    for (const auto& b : ds.biomarker_specs) out << "," << b.name;
    out << "\n";
    out.precision(17);
    for (const auto& s : ds.subjects) {
        for (const auto& v : s.visits) {
            out << s.subject_id << "," << v.time << "," << s.observed_time << ","
                << s.event_indicator;
            for (double c : s.covariates) out << "," << c;
            for (const auto& y : v.values) {
                out << ",";
                if (y) out << *y;
                else out << "NA";
            }
            out << "\n";
        }
    }
}

void export_csv_long(const LongitudinalDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    export_csv_long(ds, out);
}

}  // namespace mbjm
