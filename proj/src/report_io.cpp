#include "ptme/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

#include "ptme/errors.hpp"

namespace ptme {

std::string fmt_double(double x, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, x);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path parent = path.parent_path();
  if (!parent.empty()) {
    fs::create_directories(parent, ec);
    if (ec) fail(ErrorKind::IoFailure, "cannot create " + parent.string() + ": " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      fail(ErrorKind::IoFailure, "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::IoFailure, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
  nlohmann::json j{
      {"ptm", report.ptm},
      {"iptm", report.iptm},
      {"iptm_mean", report.iptm_mean},
      {"ptm_energy", report.ptm_energy},
      {"interface_pae_raw", report.interface_pae_raw},
      {"interface_pae_norm", report.interface_pae_norm},
  };
  if (report.plddt_mean)
    j["plddt_mean"] = *report.plddt_mean;
  else
    j["plddt_mean"] = nullptr;
  return j;
}

nlohmann::json filter_to_json(const FilterVerdict& verdict) {
  nlohmann::json criteria = nlohmann::json::array();
  for (const auto& c : verdict.criteria) {
    criteria.push_back({{"name", c.name},
                        {"op", std::string(1, c.op)},
                        {"threshold", c.threshold},
                        {"value", c.value},
                        {"pass", c.pass}});
  }
  return {{"pass", verdict.pass}, {"criteria", criteria}};
}

std::string filter_to_text(const FilterVerdict& verdict) {
  std::string out;
  for (const auto& c : verdict.criteria) {
    out += c.name;
    out += ' ';
    out += fmt_double(c.value);
    out += ' ';
    out += c.op;
    out += ' ';
    out += fmt_double(c.threshold);
    out += c.pass ? "  ok\n" : "  FAIL\n";
  }
  out += verdict.pass ? "PASS\n" : "FAIL\n";
  return out;
}

nlohmann::json gradient_report_to_json(const GradientReport& report) {
  return {{"k", report.k},
          {"steps", report.steps},
          {"engaged_fraction", report.engaged_fraction},
          {"topk_frequency", report.topk_frequency}};
}

std::string per_pair_heatmap_csv(const GradientReport& report) {
  std::string out = "binder_index,target_index,value\n";
  for (std::size_t i = 0; i < report.per_pair_max.rows; ++i) {
    for (std::size_t j = 0; j < report.per_pair_max.cols; ++j) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += fmt_double(report.per_pair_max.at(i, j));
      out += '\n';
    }
  }
  return out;
}

nlohmann::json trajectory_summary_json(const TrajectoryRecord& record) {
  auto opt_num = [](const auto& o) -> nlohmann::json {
    if (o) return *o;
    return nullptr;
  };
  return {{"objective", objective_name(record.objective)},
          {"seed", record.seed},
          {"binder_length", record.binder_length},
          {"steps", record.steps.size()},
          {"terminated_early", record.terminated_early},
          {"termination_reason", record.termination_reason},
          {"final_sequence", record.final_sequence},
          {"stage4_entry_loss", opt_num(record.stage4_entry_loss)},
          {"final_loss", opt_num(record.final_loss)},
          {"final_clashes", opt_num(record.final_clashes)},
          {"step0_grad_support", opt_num(record.step0_grad_support)},
          {"step0_argmax_row", opt_num(record.step0_argmax_row)}};
}

std::string trajectory_trace_csv(const TrajectoryRecord& record) {
  std::string out =
      "step,stage,loss_total,energy,plddt,ipae,intra_pae,con_inter,con_intra,"
      "rad_gyr,temperature,accepted\n";
  for (const auto& s : record.steps) {
    out += std::to_string(s.step);
    out += ',';
    out += std::to_string(s.stage);
    for (double v : {s.loss_total, s.parts.energy, s.parts.plddt, s.parts.ipae,
                     s.parts.intra_pae, s.parts.con_inter, s.parts.con_intra,
                     s.parts.rad_gyr, s.temperature}) {
      out += ',';
      out += fmt_double(v);
    }
    out += s.accepted ? ",1\n" : ",0\n";
  }
  return out;
}

std::string fasta_entry(const TrajectoryRecord& record) {
  if (record.final_sequence.empty()) return {};
  std::string header = ">design_" + std::to_string(record.seed);
  header += " objective=";
  header += objective_name(record.objective);
  if (record.final_loss) {
    header += " loss=";
    header += fmt_double(*record.final_loss);
  }
  return header + "\n" + record.final_sequence + "\n";
}

nlohmann::json screening_report_to_json(const ScreeningReport& report) {
  nlohmann::json precision = nlohmann::json::array();
  for (const auto& [k, p] : report.precision)
    precision.push_back({{"k", k}, {"value", p}});
  nlohmann::json positives = nlohmann::json::array();
  for (const auto& m : report.positives)
    positives.push_back({{"id", m.id}, {"score", m.score}, {"rank", m.rank}});
  return {{"auprc", report.auprc},
          {"candidates", report.ranking.size()},
          {"positives", positives},
          {"precision_at_k", precision},
          {"histogram",
           {{"lo", report.histogram.lo},
            {"hi", report.histogram.hi},
            {"width", report.histogram.width},
            {"counts", report.histogram.counts}}}};
}

std::string ranking_csv(const ScreeningReport& report) {
  std::string out = "rank,candidate_id,label,score\n";
  std::size_t rank = 1;
  for (const auto& c : report.ranking) {
    out += std::to_string(rank++);
    out += ',';
    out += c.id;
    out += ',';
    out += std::to_string(c.label);
    out += ',';
    out += fmt_double(c.score);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const ScreeningReport& report) {
  std::string out = "bin_lo,bin_hi,count\n";
  const auto& h = report.histogram;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lo = h.lo + h.width * static_cast<double>(b);
    const double hi = (b + 1 == h.counts.size()) ? h.hi : lo + h.width;
    out += fmt_double(lo);
    out += ',';
    out += fmt_double(hi);
    out += ',';
    out += std::to_string(h.counts[b]);
    out += '\n';
  }
  return out;
}

}  // namespace ptme
