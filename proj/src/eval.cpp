#include "segnoise/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "segnoise/errors.hpp"
#include "segnoise/mask.hpp"
#include "segnoise/parallel.hpp"

namespace segnoise {

double iou_threshold(int i) { return (50 + 5 * i) / 100.0; }

const char* const kRangeNames[kNumRanges] = {"all", "small", "medium", "large"};

namespace {

// Area ranges follow the COCO convention: bounds are inclusive on both ends.
constexpr double kRangeLo[kNumRanges] = {0.0, 0.0, 32.0 * 32.0, 96.0 * 96.0};
constexpr double kRangeHi[kNumRanges] = {1e10, 32.0 * 32.0, 96.0 * 96.0, 1e10};

bool in_range(double area, int r) { return area >= kRangeLo[r] && area <= kRangeHi[r]; }

// Per (metric, threshold, range): prediction outcomes in id order.
// 0 = false positive, 1 = true positive, 2 = ignored.
struct CatCell {
  std::vector<unsigned char> outcomes[2][kNumThresholds][kNumRanges];
  long long n_gt[kNumRanges] = {};
};

struct ImageEval {
  std::map<long long, CatCell> cats;
};

struct GlobalCell {
  std::vector<unsigned char> outcomes;
  long long n_gt = 0;
};

} // namespace

std::vector<int> greedy_match_cell(const std::vector<std::vector<double>>& iou,
                                   const std::vector<char>& gt_ignore, double threshold) {
  std::size_t n_gt = gt_ignore.size();
  std::vector<int> dt_match(iou.size(), -1);
  std::vector<char> gt_used(n_gt, 0);
  for (std::size_t p = 0; p < iou.size(); ++p) {
    double bar = std::min(threshold, 1.0 - 1e-10);
    int m = -1;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (gt_used[g]) continue;
      // Once a non-ignored match is in hand, ignored candidates cannot
      // displace it.
      if (m > -1 && !gt_ignore[static_cast<std::size_t>(m)] && gt_ignore[g]) break;
      if (iou[p][g] < bar) continue;
      bar = iou[p][g];
      m = static_cast<int>(g);
    }
    if (m > -1) {
      gt_used[static_cast<std::size_t>(m)] = 1;
      dt_match[p] = m;
    }
  }
  return dt_match;
}

double interpolated_ap(const std::vector<char>& is_tp, long long n_gt) {
  if (n_gt <= 0) return -1.0;
  std::size_t n = is_tp.size();
  if (n == 0) return 0.0;
  std::vector<double> prec(n), rec(n);
  long long tp = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_tp[i])
      ++tp;
    else
      ++fp;
    prec[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    rec[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }
  for (std::size_t i = n - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double sum = 0.0;
  for (int j = 0; j <= 100; ++j) {
    double r = j / 100.0;
    auto it = std::lower_bound(rec.begin(), rec.end(), r);
    if (it != rec.end()) sum += prec[static_cast<std::size_t>(it - rec.begin())];
  }
  return sum / 101.0;
}

EvalReport evaluate_ann_vs_ann(const Dataset& truth, const Dataset& pred, int band_width,
                               unsigned workers) {
  // Both sides must describe the same images and category table.
  auto timg = image_index(truth);
  auto pimg = image_index(pred);
  if (timg.size() != pimg.size()) throw ValidationError("evaluate: image tables differ in size");
  for (const auto& [id, pos] : timg) {
    auto it = pimg.find(id);
    if (it == pimg.end()) throw ValidationError("evaluate: image id " + std::to_string(id) +
                                                " missing from the second dataset");
    const ImageInfo& a = truth.images[pos];
    const ImageInfo& b = pred.images[it->second];
    if (a.width != b.width || a.height != b.height)
      throw ValidationError("evaluate: image " + std::to_string(id) + " dimensions differ");
  }
  std::vector<long long> cat_ids;
  for (const Category& c : truth.categories) cat_ids.push_back(c.id);
  std::sort(cat_ids.begin(), cat_ids.end());
  {
    auto key = [](const Dataset& d) {
      std::vector<std::tuple<long long, std::string, std::string>> t;
      for (const Category& c : d.categories) t.emplace_back(c.id, c.name, c.supercategory);
      std::sort(t.begin(), t.end());
      return t;
    };
    if (key(truth) != key(pred)) throw ValidationError("evaluate: category tables differ");
  }
  std::map<long long, std::size_t> cat_pos;
  for (std::size_t i = 0; i < cat_ids.size(); ++i) cat_pos[cat_ids[i]] = i;

  std::vector<long long> image_ids;
  for (const ImageInfo& im : truth.images) image_ids.push_back(im.id);
  std::sort(image_ids.begin(), image_ids.end());
  std::map<long long, std::size_t> img_pos;
  for (std::size_t i = 0; i < image_ids.size(); ++i) img_pos[image_ids[i]] = i;

  // Group annotation indices per image, ascending id, crowd excluded.
  std::vector<std::vector<std::size_t>> gt_by_img(image_ids.size()), dt_by_img(image_ids.size());
  for (std::size_t i = 0; i < truth.annotations.size(); ++i)
    if (truth.annotations[i].iscrowd == 0)
      gt_by_img[img_pos.at(truth.annotations[i].image_id)].push_back(i);
  for (std::size_t i = 0; i < pred.annotations.size(); ++i)
    if (pred.annotations[i].iscrowd == 0)
      dt_by_img[img_pos.at(pred.annotations[i].image_id)].push_back(i);
  auto by_id = [](const Dataset& d) {
    return [&d](std::size_t a, std::size_t b) { return d.annotations[a].id < d.annotations[b].id; };
  };
  for (auto& v : gt_by_img) std::sort(v.begin(), v.end(), by_id(truth));
  for (auto& v : dt_by_img) std::sort(v.begin(), v.end(), by_id(pred));

  std::vector<ImageEval> slots(image_ids.size());
  parallel_for(image_ids.size(), workers, [&](std::size_t ii) {
    const ImageInfo& img = truth.images[timg.at(image_ids[ii])];
    int d = band_width > 0 ? band_width : default_band_width(img.height, img.width);
    // Rasterize once per annotation; bands are derived from the same masks.
    const auto& gts = gt_by_img[ii];
    const auto& dts = dt_by_img[ii];
    if (gts.empty() && dts.empty()) return;
    std::vector<InstanceMask> gmask, dmask, gband, dband;
    gmask.reserve(gts.size());
    dmask.reserve(dts.size());
    for (std::size_t gi : gts) {
      gmask.push_back(annotation_mask(truth.annotations[gi], img.height, img.width));
      gband.push_back(boundary_band(gmask.back(), d));
    }
    for (std::size_t di : dts) {
      dmask.push_back(annotation_mask(pred.annotations[di], img.height, img.width));
      dband.push_back(boundary_band(dmask.back(), d));
    }
    ImageEval& out = slots[ii];
    for (const auto& [cid, cpos] : cat_pos) {
      (void)cpos;
      std::vector<std::size_t> cg, cd; // positions into gts/dts
      for (std::size_t k = 0; k < gts.size(); ++k)
        if (truth.annotations[gts[k]].category_id == cid) cg.push_back(k);
      for (std::size_t k = 0; k < dts.size(); ++k)
        if (pred.annotations[dts[k]].category_id == cid) cd.push_back(k);
      if (cg.empty() && cd.empty()) continue;
      CatCell& cell = out.cats[cid];
      std::vector<std::vector<double>> iou[2];
      for (int m = 0; m < 2; ++m) {
        iou[m].assign(cd.size(), std::vector<double>(cg.size(), 0.0));
        for (std::size_t p = 0; p < cd.size(); ++p)
          for (std::size_t g = 0; g < cg.size(); ++g)
            iou[m][p][g] = m == 0 ? mask_iou(dmask[cd[p]], gmask[cg[g]])
                                  : mask_iou(dband[cd[p]], gband[cg[g]]);
      }
      for (int r = 0; r < kNumRanges; ++r) {
        std::vector<char> ig(cg.size());
        for (std::size_t g = 0; g < cg.size(); ++g)
          ig[g] = !in_range(truth.annotations[gts[cg[g]]].area, r);
        // Stable partition: non-ignored ground truths first.
        std::vector<std::size_t> gord(cg.size());
        std::iota(gord.begin(), gord.end(), std::size_t{0});
        std::stable_sort(gord.begin(), gord.end(),
                         [&](std::size_t a, std::size_t b) { return ig[a] < ig[b]; });
        std::vector<char> ig_sorted(cg.size());
        for (std::size_t g = 0; g < cg.size(); ++g) ig_sorted[g] = ig[gord[g]];
        cell.n_gt[r] =
            static_cast<long long>(std::count(ig.begin(), ig.end(), static_cast<char>(0)));
        for (int m = 0; m < 2; ++m) {
          std::vector<std::vector<double>> iou_sorted(cd.size(),
                                                      std::vector<double>(cg.size(), 0.0));
          for (std::size_t p = 0; p < cd.size(); ++p)
            for (std::size_t g = 0; g < cg.size(); ++g) iou_sorted[p][g] = iou[m][p][gord[g]];
          for (int t = 0; t < kNumThresholds; ++t) {
            std::vector<int> match = greedy_match_cell(iou_sorted, ig_sorted, iou_threshold(t));
            std::vector<unsigned char>& oc = cell.outcomes[m][t][r];
            oc.resize(cd.size());
            for (std::size_t p = 0; p < cd.size(); ++p) {
              if (match[p] >= 0) {
                oc[p] = ig_sorted[static_cast<std::size_t>(match[p])] ? 2 : 1;
              } else {
                oc[p] = in_range(pred.annotations[dts[cd[p]]].area, r) ? 0 : 2;
              }
            }
          }
        }
      }
    }
  });

  // Deterministic reduce: images ascending, categories ascending.
  std::vector<std::vector<GlobalCell>> cells[2][kNumThresholds];
  for (int m = 0; m < 2; ++m)
    for (int t = 0; t < kNumThresholds; ++t)
      cells[m][t].assign(kNumRanges, std::vector<GlobalCell>(cat_ids.size()));
  for (std::size_t ii = 0; ii < image_ids.size(); ++ii) {
    for (const auto& [cid, cell] : slots[ii].cats) {
      std::size_t c = cat_pos.at(cid);
      for (int m = 0; m < 2; ++m)
        for (int t = 0; t < kNumThresholds; ++t)
          for (int r = 0; r < kNumRanges; ++r) {
            GlobalCell& gc = cells[m][t][static_cast<std::size_t>(r)][c];
            const auto& oc = cell.outcomes[m][t][r];
            gc.outcomes.insert(gc.outcomes.end(), oc.begin(), oc.end());
            gc.n_gt += cell.n_gt[r]; // range-dependent only, same for every (m, t)
          }
    }
  }

  EvalReport rep;
  rep.band_width = band_width > 0 ? band_width : 0;
  for (int t = 0; t < kNumThresholds; ++t) rep.thresholds.push_back(iou_threshold(t));
  rep.category_ids = cat_ids;
  for (int m = 0; m < 2; ++m)
    for (int t = 0; t < kNumThresholds; ++t) {
      rep.ap_cat[m][t].assign(cat_ids.size(), -1.0);
      rep.counts_cat[m][t].assign(cat_ids.size(), EvalCounts{});
    }
  for (int m = 0; m < 2; ++m)
    for (int t = 0; t < kNumThresholds; ++t)
      for (int r = 0; r < kNumRanges; ++r) {
        double ap_sum = 0.0;
        int ap_n = 0;
        EvalCounts total;
        for (std::size_t c = 0; c < cat_ids.size(); ++c) {
          const GlobalCell& gc = cells[m][t][static_cast<std::size_t>(r)][c];
          std::vector<char> is_tp;
          EvalCounts ec;
          for (unsigned char o : gc.outcomes) {
            if (o == 2) continue;
            is_tp.push_back(o == 1);
            if (o == 1)
              ++ec.tp;
            else
              ++ec.fp;
          }
          ec.fn = gc.n_gt - ec.tp;
          double ap = interpolated_ap(is_tp, gc.n_gt);
          if (ap >= 0.0) {
            ap_sum += ap;
            ++ap_n;
          }
          total.tp += ec.tp;
          total.fp += ec.fp;
          total.fn += ec.fn;
          if (r == 0) {
            rep.ap_cat[m][t][c] = ap;
            rep.counts_cat[m][t][c] = ec;
          }
        }
        rep.ap[m][t][r] = ap_n > 0 ? ap_sum / ap_n : -1.0;
        rep.counts[m][t][r] = total;
      }
  auto mean_over_t = [&](int m, int r) {
    double s = 0.0;
    int n = 0;
    for (int t = 0; t < kNumThresholds; ++t)
      if (rep.ap[m][t][r] >= 0.0) {
        s += rep.ap[m][t][r];
        ++n;
      }
    return n > 0 ? s / n : -1.0;
  };
  for (int m = 0; m < 2; ++m)
    for (int r = 0; r < kNumRanges; ++r) rep.map_by_range[m][r] = mean_over_t(m, r);
  rep.map_mask = rep.map_by_range[0][0];
  rep.map_boundary = rep.map_by_range[1][0];
  rep.ap_small = rep.map_by_range[0][1];
  rep.ap_medium = rep.map_by_range[0][2];
  rep.ap_large = rep.map_by_range[0][3];
  return rep;
}

namespace {
const char* metric_name(int m) { return m == 0 ? "mask" : "boundary"; }
} // namespace

std::string report_csv(const EvalReport& r) {
  std::string out = "metric,threshold,scope,ap,tp,fp,fn\n";
  for (int m = 0; m < 2; ++m)
    for (int t = 0; t < kNumThresholds; ++t) {
      for (int rg = 0; rg < kNumRanges; ++rg) {
        out += metric_name(m);
        out += ',';
        out += number_repr(r.thresholds[static_cast<std::size_t>(t)]);
        out += ',';
        out += kRangeNames[rg];
        out += ',';
        out += number_repr(r.ap[m][t][rg]);
        out += ',';
        out += std::to_string(r.counts[m][t][rg].tp);
        out += ',';
        out += std::to_string(r.counts[m][t][rg].fp);
        out += ',';
        out += std::to_string(r.counts[m][t][rg].fn);
        out += '\n';
      }
      for (std::size_t c = 0; c < r.category_ids.size(); ++c) {
        out += metric_name(m);
        out += ',';
        out += number_repr(r.thresholds[static_cast<std::size_t>(t)]);
        out += ",cat:";
        out += std::to_string(r.category_ids[c]);
        out += ',';
        out += number_repr(r.ap_cat[m][t][c]);
        out += ',';
        out += std::to_string(r.counts_cat[m][t][c].tp);
        out += ',';
        out += std::to_string(r.counts_cat[m][t][c].fp);
        out += ',';
        out += std::to_string(r.counts_cat[m][t][c].fn);
        out += '\n';
      }
    }
  return out;
}

ordered_json report_json(const EvalReport& r) {
  ordered_json root;
  root["band_width"] = r.band_width;
  root["thresholds"] = r.thresholds;
  root["category_ids"] = r.category_ids;
  for (int m = 0; m < 2; ++m) {
    ordered_json sec;
    sec["map"] = m == 0 ? r.map_mask : r.map_boundary;
    if (m == 0) {
      sec["ap_small"] = r.ap_small;
      sec["ap_medium"] = r.ap_medium;
      sec["ap_large"] = r.ap_large;
    }
    ordered_json per_t;
    for (int rg = 0; rg < kNumRanges; ++rg) {
      ordered_json arr = ordered_json::array();
      for (int t = 0; t < kNumThresholds; ++t) arr.push_back(r.ap[m][t][rg]);
      per_t[kRangeNames[rg]] = arr;
    }
    sec["per_threshold"] = per_t;
    ordered_json per_c;
    for (std::size_t c = 0; c < r.category_ids.size(); ++c) {
      ordered_json arr = ordered_json::array();
      for (int t = 0; t < kNumThresholds; ++t) arr.push_back(r.ap_cat[m][t][c]);
      per_c[std::to_string(r.category_ids[c])] = arr;
    }
    sec["per_category"] = per_c;
    ordered_json counts;
    for (int rg = 0; rg < kNumRanges; ++rg) {
      ordered_json arr = ordered_json::array();
      for (int t = 0; t < kNumThresholds; ++t) {
        ordered_json e;
        e["tp"] = r.counts[m][t][rg].tp;
        e["fp"] = r.counts[m][t][rg].fp;
        e["fn"] = r.counts[m][t][rg].fn;
        arr.push_back(e);
      }
      counts[kRangeNames[rg]] = arr;
    }
    sec["counts"] = counts;
    root[metric_name(m)] = sec;
  }
  return root;
}

} // namespace segnoise
