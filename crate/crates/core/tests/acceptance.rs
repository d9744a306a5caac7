//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Built with `harness = false`.

mod common;

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foggen::color::{srgb_to_cielab, LabColor};
use foggen::dataset::{build_ssl_manifest, EntrySource};
use foggen::depth::{denoise_and_complete, match_superpixels, matching_cost, matching_cost_cosine, Plane};
use foggen::eval::{agreement_fraction, mean_iou, BinnedConfusion, ConfusionMatrix, PairwiseCounts, DEFAULT_BIN_EDGES};
use foggen::fog::{composite_fog, invert_fog, mor_from_beta, AtmosphericLight};
use foggen::guided_filter::guided_filter;
use foggen::labels::{all_classes, LabelMap, NUM_CLASSES, VOID};
use foggen::params::{GuidedFilterParams, PipelineParams};
use foggen::raster::{Image, ScalarField};
use foggen::seed::DEFAULT_SEED;
use foggen::superpixel::{slic_segment, SuperpixelRecord, SuperpixelSegmentation};
use foggen::synthetic::{SceneSpec, StereoScene};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Runner {
    failed: Vec<usize>,
}

impl Runner {
    fn run(&mut self, id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; over time limit {limit:?}")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} [{id:2}] {name} ({elapsed:.2?}): {detail}");
        if outcome.is_err() {
            self.failed.push(id);
        }
    }
}

fn mor_table() -> Check {
    // Stated approximations and the rounded exact values.
    let rows = [
        (0.005, 600.0, 599.2, 0.05),
        (0.01, 300.0, 299.6, 0.05),
        (0.02, 150.0, 149.8, 0.05),
        (0.03, 100.0, 99.87, 0.005),
        (0.06, 50.0, 49.93, 0.005),
    ];
    let start = Instant::now();
    let mors: Vec<f64> = rows.iter().map(|r| mor_from_beta(r.0).unwrap()).collect();
    let elapsed = start.elapsed();
    let mut worst: f64 = 0.0;
    for ((beta, approx, exact, half_ulp), mor) in rows.iter().zip(&mors) {
        let rel = (mor - approx).abs() / approx;
        worst = worst.max(rel);
        ensure(rel <= 0.005, || format!("beta {beta}: {mor} is {rel:.4} off {approx}"))?;
        ensure((mor - exact).abs() <= *half_ulp + 1e-12, || format!("beta {beta}: {mor} does not round to {exact}"))?;
    }
    ensure(elapsed < Duration::from_millis(1), || format!("table took {elapsed:?}"))?;
    Ok(format!("max relative deviation {worst:.4}, computed in {elapsed:?}"))
}

fn round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (w, h) = (256, 256);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let clear = Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        let t = ScalarField::from_fn(w, h, |_, _| rng.gen_range(0.05..=1.0));
        let light = AtmosphericLight {
            rgb: [rng.gen_range(0.5..=1.0), rng.gen_range(0.5..=1.0), rng.gen_range(0.5..=1.0)],
            pixel: [0, 0],
        };
        let foggy = composite_fog(&clear, &t, &light).map_err(|e| e.to_string())?;
        let back = invert_fog(&foggy, &t, &light).map_err(|e| e.to_string())?;
        ensure(!back.uninvertible.iter().any(|&b| b), || "pixel flagged uninvertible".into())?;
        for (a, b) in clear.data().iter().zip(back.image.data()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max abs error {worst:e}"))?;
    Ok(format!("max abs error {worst:.2e} over 100 scenes"))
}

fn depth_oracle() -> Check {
    let spec = SceneSpec::three_planes();
    ensure((spec.width, spec.height) == (512, 256), || "scene size".into())?;
    let scene = StereoScene::generate(&spec);
    let params = PipelineParams::default();
    let out = denoise_and_complete(&scene.left, &scene.right, &scene.disparity, &spec.rig, &params, DEFAULT_SEED)
        .map_err(|e| e.to_string())?;
    let n = spec.width * spec.height;
    let holes = scene.holes.iter().filter(|&&b| b).count() as f64 / n as f64;
    let outliers = scene.outliers.iter().filter(|&&b| b).count() as f64 / n as f64;

    let mut err: Vec<f64> = (0..n)
        .map(|i| (out.depth.values()[i] - scene.depth.values()[i]).abs())
        .collect();
    err.sort_by(f64::total_cmp);
    let median = err[n / 2];
    ensure(median < 0.1, || format!("median |d' - truth| = {median:.4} m"))?;

    // Reliability by brute-force pixel count with integer arithmetic.
    let seg = &out.segmentation;
    let mut size = vec![0usize; seg.count()];
    let mut valid = vec![0usize; seg.count()];
    for (i, &l) in seg.labels().iter().enumerate() {
        size[l as usize] += 1;
        valid[l as usize] += usize::from(out.raw_depth.valid()[i]);
    }
    let mismatched = (0..seg.count())
        .filter(|&k| {
            let oracle = valid[k] >= params.min_valid && 5 * valid[k] >= 3 * size[k];
            oracle != out.count_reliable[k]
        })
        .count();
    ensure(mismatched == 0, || format!("{mismatched} superpixels misclassified"))?;

    let raw = &out.raw_depth;
    let mut kept_outliers = 0;
    let mut surviving_outliers = 0;
    let mut clean = 0;
    let mut altered = 0;
    for i in 0..n {
        if !raw.valid()[i] {
            continue;
        }
        let (d, r) = (out.depth.values()[i], raw.values()[i]);
        if scene.outliers[i] {
            surviving_outliers += 1;
            if d.to_bits() == r.to_bits() {
                kept_outliers += 1;
            }
        } else {
            clean += 1;
            if d.to_bits() != r.to_bits() {
                altered += 1;
            }
        }
    }
    ensure(kept_outliers == 0, || {
        format!("{kept_outliers} of {surviving_outliers} outliers past the photo check were kept")
    })?;
    ensure(altered == 0, || format!("{altered} of {clean} clean valid pixels altered"))?;
    Ok(format!(
        "median error {median:.4} m; {} superpixels classified; {surviving_outliers} outliers replaced; \
         {clean} clean pixels preserved; holes {:.1}%, outliers {:.1}%",
        seg.count(),
        holes * 100.0,
        outliers * 100.0
    ))
}

fn gray_pathology() -> Check {
    // Reference L* from scikit-image 0.25 for (v, v, v), v = delta and 1 - delta.
    let reference = [
        (0.05, 3.555302666527531, 95.58064586656363),
        (0.1, 9.010442756551818, 91.11707838253791),
        (0.2, 21.24673129498138, 82.04578167434552),
    ];
    let mut summary = Vec::new();
    for (delta, l_dark, l_light) in reference {
        ensure(l_light - l_dark > 10.0, || "reference gap".into())?;
        let (dark, light) = ([delta; 3], [1.0 - delta; 3]);
        let (a, b) = (srgb_to_cielab(dark), srgb_to_cielab(light));
        ensure((a.l - l_dark).abs() < 1e-3 && (b.l - l_light).abs() < 1e-3, || {
            format!("delta {delta}: L* {} / {} vs reference {l_dark} / {l_light}", a.l, b.l)
        })?;
        let cosine = matching_cost_cosine(dark, light).map_err(|e| e.to_string())?;
        let rec = |lab: LabColor| SuperpixelRecord::new(lab, [0.0, 0.0]);
        let color = matching_cost(&rec(a), &rec(b), 0.0);
        ensure(cosine < 1e-12, || format!("delta {delta}: cosine cost {cosine:e}"))?;
        ensure(color > 100.0, || format!("delta {delta}: color term {color}"))?;
        summary.push(format!("delta {delta}: cosine {cosine:.1e}, color {color:.0}"));
    }
    Ok(summary.join("; "))
}

fn seg_of(records: Vec<SuperpixelRecord>) -> SuperpixelSegmentation {
    let labels: Vec<u32> = (0..records.len() as u32).collect();
    let img = Image::filled(records.len(), 1, [0.5; 3]);
    let mut seg = SuperpixelSegmentation::from_labels(&img, labels).unwrap();
    seg.records = records;
    seg
}

fn greedy_vs_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ties = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(2..=10);
        let coarse = trial % 2 == 0;
        let records: Vec<SuperpixelRecord> = (0..n)
            .map(|_| {
                let (lab, xy) = if coarse {
                    (
                        LabColor::new(rng.gen_range(0..3) as f64 * 10.0, rng.gen_range(0..2) as f64, 0.0),
                        [rng.gen_range(0..3) as f64, rng.gen_range(0..3) as f64],
                    )
                } else {
                    (
                        LabColor::new(rng.gen_range(0.0..100.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)),
                        [rng.gen_range(0.0..512.0), rng.gen_range(0.0..256.0)],
                    )
                };
                let mut r = SuperpixelRecord::new(lab, xy);
                r.reliable = true;
                r.plane = Some(Plane { a: 0.0, b: 0.0, c: 1.0 });
                r
            })
            .collect();
        let mut records = records;
        let target = rng.gen_range(0..n);
        records[target].reliable = false;
        records[target].plane = None;
        let alpha = rng.gen_range(0.01..2.0);

        let costs: Vec<(usize, f64)> = (0..n)
            .filter(|&s| s != target)
            .map(|s| (s, matching_cost(&records[target], &records[s], alpha)))
            .collect();
        let min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let argmins: Vec<usize> = costs.iter().filter(|c| c.1 == min).map(|c| c.0).collect();
        if argmins.len() > 1 {
            ties += 1;
        }

        let got = match_superpixels(&seg_of(records), alpha).map_err(|e| e.to_string())?;
        ensure(got.pairs.len() == 1, || format!("trial {trial}: {} pairs", got.pairs.len()))?;
        let p = got.pairs[0];
        ensure(p.unreliable == target && p.source == argmins[0], || {
            format!("trial {trial}: matched {} -> {}, exhaustive argmin {:?}", p.unreliable, p.source, argmins)
        })?;
    }
    Ok(format!("1000 trials agree ({ties} with tied minima, lowest id wins)"))
}

fn guided_filter_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = GuidedFilterParams::default();
    let (w, h) = (128, 128);
    let mut worst_fix: f64 = 0.0;
    let mut worst_lin: f64 = 0.0;
    for _ in 0..50 {
        let guide = Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        let c: f64 = rng.gen_range(-5.0..5.0);
        let constant = guided_filter(&ScalarField::constant(w, h, c), &guide, &params).map_err(|e| e.to_string())?;
        for x in constant.values() {
            worst_fix = worst_fix.max((x - c).abs());
        }
        let p = ScalarField::from_fn(w, h, |_, _| rng.gen());
        let q = ScalarField::from_fn(w, h, |_, _| rng.gen());
        let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let mix = ScalarField::from_fn(w, h, |u, v| a * p.value(u, v) + b * q.value(u, v));
        let fp = guided_filter(&p, &guide, &params).map_err(|e| e.to_string())?;
        let fq = guided_filter(&q, &guide, &params).map_err(|e| e.to_string())?;
        let fm = guided_filter(&mix, &guide, &params).map_err(|e| e.to_string())?;
        for i in 0..w * h {
            let expect = a * fp.values()[i] + b * fq.values()[i];
            worst_lin = worst_lin.max((fm.values()[i] - expect).abs());
        }
    }
    ensure(worst_fix <= 1e-9, || format!("constant fixpoint error {worst_fix:e}"))?;
    ensure(worst_lin <= 1e-9, || format!("linearity error {worst_lin:e}"))?;
    Ok(format!("fixpoint error {worst_fix:.1e}, linearity error {worst_lin:.1e}"))
}

fn check_partition(seg: &SuperpixelSegmentation) -> Result<(), String> {
    let (w, h) = (seg.width(), seg.height());
    let k = seg.count();
    let labels = seg.labels();
    ensure(labels.len() == w * h, || "label raster size".into())?;
    let mut size = vec![0usize; k];
    for &l in labels {
        ensure((l as usize) < k, || format!("label {l} out of range {k}"))?;
        size[l as usize] += 1;
    }
    for (id, (&s, r)) in size.iter().zip(&seg.records).enumerate() {
        ensure(s > 0 && s == r.pixel_count, || format!("superpixel {id}: {s} pixels, record says {}", r.pixel_count))?;
    }
    // Every label must be reached from one seed by 4-neighbor flood fill.
    let mut seen = vec![false; w * h];
    let mut components = vec![0usize; k];
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        components[l as usize] += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (u, v) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !seen[j] && labels[j] == l {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if u > 0 {
                visit(i - 1);
            }
            if u + 1 < w {
                visit(i + 1);
            }
            if v > 0 {
                visit(i - w);
            }
            if v + 1 < h {
                visit(i + w);
            }
        }
    }
    if let Some(id) = components.iter().position(|&c| c != 1) {
        return Err(format!("superpixel {id} has {} 4-connected components", components[id]));
    }
    Ok(())
}

fn slic_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (w, h) = (256, 256);
    let mut counts = Vec::new();
    for k in 0..20 {
        // Alternate pixel noise with smooth blobs.
        let image = if k % 2 == 0 {
            Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
        } else {
            let blobs: Vec<([f64; 2], [f64; 3])> = (0..12)
                .map(|_| ([rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64)], [rng.gen(), rng.gen(), rng.gen()]))
                .collect();
            Image::from_fn(w, h, |u, v| {
                let nearest = blobs
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.0[0] - u as f64).powi(2) + (a.0[1] - v as f64).powi(2);
                        let db = (b.0[0] - u as f64).powi(2) + (b.0[1] - v as f64).powi(2);
                        da.total_cmp(&db)
                    })
                    .unwrap();
                nearest.1
            })
        };
        for k_hat in [16, 256] {
            let a = slic_segment(&image, k_hat, 10.0).map_err(|e| e.to_string())?;
            check_partition(&a).map_err(|e| format!("image {k}, K {k_hat}: {e}"))?;
            let b = slic_segment(&image, k_hat, 10.0).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("image {k}, K {k_hat}: second run differs"))?;
            counts.push(a.count());
        }
    }
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    Ok(format!("40 segmentations valid and repeatable, {lo}..{hi} superpixels"))
}

fn agreement_extremes() -> Check {
    let frac = |m: u64, a: Vec<Vec<u64>>| PairwiseCounts::new(m, a).map(|c| agreement_fraction(&c)).map_err(|e| e.to_string());
    // num / den == p / q  <=>  num * q == p * den
    let equals = |(num, den): (i128, u128), p: i128, q: i128| num * q == p * den as i128;
    let unanimous = frac(3, vec![vec![0, 3], vec![0, 0]])?;
    let unanimous3 = frac(4, vec![vec![0, 4, 4], vec![0, 0, 4], vec![0, 0, 0]])?;
    let split = frac(3, vec![vec![0, 2], vec![1, 0]])?;
    ensure(equals(unanimous, 1, 1) && equals(unanimous3, 1, 1), || format!("unanimous gives {unanimous:?}, {unanimous3:?}"))?;
    ensure(equals(split, -1, 3), || format!("2-vs-1 split gives {split:?}"))?;
    Ok(format!(
        "unanimous {}/{}, split {}/{} exactly",
        unanimous.0, unanimous.1, split.0, split.1
    ))
}

fn evaluation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (w, h) = (200, 120);
    let label = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            VOID
        } else {
            rng.gen_range(0..NUM_CLASSES as u8)
        }
    };
    let classes = all_classes();
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let gt: Vec<u8> = (0..w * h).map(|_| label(&mut rng)).collect();
        let pred: Vec<u8> = gt.iter().map(|&g| if rng.gen_bool(0.3) { label(&mut rng) } else { g }).collect();
        let gt = LabelMap::new(w, h, gt).map_err(|e| e.to_string())?;
        let pred = LabelMap::new(w, h, pred).map_err(|e| e.to_string())?;
        let distance = ScalarField::from_fn(w, h, |_, _| rng.gen_range(0.0..600.0));

        let mut same = ConfusionMatrix::new();
        same.accumulate(&gt, &gt).map_err(|e| e.to_string())?;
        let one = mean_iou(&same, &classes).map_err(|e| e.to_string())?;
        ensure(one == 1.0, || format!("trial {trial}: pred = gt scores {one}"))?;

        let mut cm = ConfusionMatrix::new();
        cm.accumulate(&pred, &gt).map_err(|e| e.to_string())?;
        let plain = mean_iou(&cm, &classes).map_err(|e| e.to_string())?;
        let mut single = BinnedConfusion::new(&[0.0, f64::INFINITY]).map_err(|e| e.to_string())?;
        single.accumulate(&pred, &gt, &distance).map_err(|e| e.to_string())?;
        let binned = single.scores(&classes).map_err(|e| e.to_string())?[0].mean_iou.unwrap_or(f64::NAN);
        worst = worst.max((binned - plain).abs());
        ensure((binned - plain).abs() <= 1e-12, || format!("trial {trial}: single bin {binned} vs {plain}"))?;

        let non_void = gt.ids().iter().filter(|&&g| g != VOID).count() as u64;
        let mut bins = BinnedConfusion::new(&DEFAULT_BIN_EDGES).map_err(|e| e.to_string())?;
        bins.accumulate(&pred, &gt, &distance).map_err(|e| e.to_string())?;
        let summed: u64 = bins.matrices().iter().map(|m| m.total()).sum();
        ensure(summed == non_void && cm.total() == non_void, || {
            format!("trial {trial}: bins hold {summed}, matrix {}, non-void {non_void}", cm.total())
        })?;
    }
    Ok(format!("20 trials; single-bin deviation {worst:.1e}; bins partition the non-void pixels"))
}

fn dataset_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("in");
    for (k, name) in ["a", "b", "c"].iter().enumerate() {
        let spec = SceneSpec {
            seed: k as u64 + 1,
            ..SceneSpec::three_planes()
        };
        common::write_scene(&input, "town", name, &spec);
    }
    let run = |out: &Path, threads: &str| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_foggen"))
            .args(["--quiet", "--threads", threads, "--seed", "42", "dataset", "--input"])
            .arg(&input)
            .arg("--output")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || {
            format!("threads {threads}: exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
        })
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, "1")?;
    run(&b, "4")?;
    let (ta, tb) = (common::snapshot(&a), common::snapshot(&b));
    let foggy = ta
        .keys()
        .filter(|p| p.to_string_lossy().contains("/foggy/") && p.extension().is_some_and(|e| e == "png"))
        .count();
    ensure(foggy == 15, || format!("{foggy} foggy images, expected 15"))?;
    if ta != tb {
        let differing: Vec<_> = ta
            .keys()
            .chain(tb.keys())
            .filter(|k| ta.get(*k) != tb.get(*k))
            .take(3)
            .map(|k| k.display().to_string())
            .collect();
        return Err(format!("trees differ, e.g. {differing:?}"));
    }
    Ok(format!("{} files bit-identical with 1 and 4 threads", ta.len()))
}

fn ssl_manifest() -> Check {
    let labeled: Vec<(String, String)> = (0..498).map(|i| (format!("l{i}.png"), format!("l{i}_gt.png"))).collect();
    let pseudo: Vec<(String, String)> = (0..20000).map(|i| (format!("p{i}.png"), format!("p{i}_pl.png"))).collect();
    let m = build_ssl_manifest(&labeled, &pseudo, 5.0, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let (human, transferred) = (m.count(EntrySource::Human), m.count(EntrySource::Transferred));
    ensure((m.header.lambda - 0.1245).abs() < 1e-12, || format!("lambda {}", m.header.lambda))?;
    ensure((m.header.l, m.header.u) == (498, 20000), || "header sizes".into())?;
    ensure(human == 498 && transferred == 2490 && m.header.entries == 2988, || {
        format!("{human} human + {transferred} transferred, header says {}", m.header.entries)
    })?;
    // Every labeled entry is followed by exactly five transferred ones.
    for (k, chunk) in m.entries.chunks(6).enumerate() {
        let ok = chunk[0].source == EntrySource::Human && chunk[1..].iter().all(|e| e.source == EntrySource::Transferred);
        ensure(ok, || format!("block {k} breaks the 1:5 pattern"))?;
    }
    let header: serde_json::Value =
        serde_json::from_str(m.to_ndjson().lines().next().unwrap()).map_err(|e| e.to_string())?;
    ensure(header["lambda"] == serde_json::json!(0.1245), || format!("serialized header {header}"))?;
    Ok(format!("lambda {}, {human} + {transferred} entries", m.header.lambda))
}

fn main() {
    let mut r = Runner { failed: Vec::new() };
    let s = Duration::from_secs;
    r.run(1, "MOR table", s(1), mor_table);
    r.run(2, "composite/invert round trip", s(5), round_trip);
    r.run(3, "synthetic depth oracle", s(30), depth_oracle);
    r.run(4, "gray-pair color cost", s(1), gray_pathology);
    r.run(5, "greedy matching vs exhaustive argmin", s(1), greedy_vs_brute_force);
    r.run(6, "guided filter fixpoint and linearity", s(10), guided_filter_identities);
    r.run(7, "SLIC partition, connectivity, determinism", s(60), slic_properties);
    r.run(8, "agreement coefficient extremes", s(1), agreement_extremes);
    r.run(9, "evaluation identities", s(10), evaluation);
    r.run(10, "dataset determinism across thread counts", s(120), dataset_determinism);
    r.run(11, "semi-supervised manifest", s(1), ssl_manifest);
    if r.failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed {:?}", r.failed);
        std::process::exit(1);
    }
}
