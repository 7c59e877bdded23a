#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "spinal/experiments.hpp"
#include "spinal/spine.hpp"

namespace spinal {

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string ExperimentReport::metadata_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = id;
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs) in[k] = v;
  j["inputs"] = in;
  j["pass"] = pass;
  j["rows"] = rows.size();
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

void ExperimentReport::write_csv(std::ostream& out) const {
  out << "# " << metadata_json() << '\n';
  out << "label,estimate,se,reference,reference_se,gap,pass\n";
  const auto old = out.precision(17);
  for (const auto& r : rows)
    out << csv_quote(r.label) << ',' << r.estimate << ',' << r.se << ',' << r.reference << ',' << r.reference_se
        << ',' << r.gap << ',' << (r.pass ? 1 : 0) << '\n';
  out.precision(old);
}

std::string ExperimentReport::summary() const {
  std::ostringstream os;
  os << id << ": " << (pass ? "PASS" : "FAIL") << " (" << rows.size() << " rows, " << wall_seconds << " s)\n";
  os.precision(6);
  for (const auto& r : rows)
    os << "  [" << (r.pass ? "ok" : "!!") << "] " << r.label << ": " << r.estimate << " +- " << r.se << " vs "
       << r.reference << " +- " << r.reference_se << " (gap " << r.gap << ")\n";
  return os.str();
}

void write_rate_svg(std::ostream& out, const ModelSpec& model, const MTable& mtab, int x, const Counts& z, double t,
                    std::size_t samples) {
  if (samples < 2) samples = 2;
  const SpineStateK state{x, z};
  // One curve per spine channel (event, new type), identified by its order
  // in the channel table, which is fixed for a given state.
  std::vector<std::string> names;
  std::vector<std::vector<double>> curves;
  std::vector<double> times;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = t * double(i) / double(samples - 1);
    const auto table = inhom_spine_rates(model, mtab, s, state, t);
    std::size_t c = 0;
    for (const auto& ch : table.channels) {
      if (ch.kind != SpineChannel::Kind::Spine) continue;
      if (i == 0) {
        std::ostringstream nm;
        const auto& ev = model.event(ch.event);
        nm << model.types().names[static_cast<std::size_t>(ev.parent)] << " k=(";
        for (std::size_t y = 0; y < ev.offspring.size(); ++y) nm << (y ? "," : "") << ev.offspring[y];
        nm << ") -> " << model.types().names[static_cast<std::size_t>(ch.type)];
        names.push_back(nm.str());
        curves.emplace_back();
      }
      curves[c++].push_back(ch.rate);
    }
    times.push_back(s);
  }
  double ymax = 0.0;
  for (const auto& cv : curves)
    for (double v : cv) ymax = std::max(ymax, v);
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.1;

  const double W = 640, H = 400, L = 60, R = 200, T = 20, B = 40;
  const double pw = W - L - R, ph = H - T - B;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">s</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymax * k / 4, py = T + ph - ph * k / 4;
    const double xv = t * k / 4, px = L + pw * k / 4;
    out << "<text x=\"" << L - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << yv
        << "</text>\n";
    out << "<text x=\"" << px << "\" y=\"" << T + ph + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << xv
        << "</text>\n";
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* col = colors[c % (sizeof(colors) / sizeof(colors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double px = L + (t > 0 ? pw * times[i] / t : 0.0);
      const double py = T + ph - ph * curves[c][i] / ymax;
      out << px << ',' << py << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << L + pw + 10 << "\" y=\"" << T + 16 * (c + 1) << "\" font-size=\"11\" fill=\"" << col
        << "\">" << names[c] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace spinal
