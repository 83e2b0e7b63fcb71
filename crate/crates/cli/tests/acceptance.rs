//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its verdict line; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use maskpath_cli::pipeline::process_mask;
use maskpath_cli::PipelineConfig;
use maskpath_core::synth::filled_disk;
use maskpath_core::{
    compute_metrics, convex_hull, tile, vacuum_field, BinaryMask, ConfusionCounts, PhysicalCalibration,
    PhysicalPoint, PixelAnchor, PixelPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(took)
    }
}

// metrics

fn metrics_reproduction() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("train", ConfusionCounts::new(97, 6, 3, 0), [97.00, 0.0, 94.17, 0.0, 8.50, 91.50]),
        ("test", ConfusionCounts::new(75, 104, 65, 326), [53.57, 75.81, 41.90, 53.97, 29.65, 70.35]),
    ];
    let mut worst = 0.0f64;
    for (name, counts, expected) in cases {
        let report = compute_metrics(&counts);
        for ((metric, got), want) in report.rows().into_iter().zip(expected) {
            let got = got.ok_or_else(|| format!("{name} {metric} undefined"))? * 100.0;
            let diff = (got - want).abs();
            worst = worst.max(diff);
            ensure!(diff <= 0.02, "{name} {metric}: {got:.4} vs {want:.2}");
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("12 values, max deviation {worst:.4} pp, {took:.2?}"))
}

// vacuum

fn naive_vacuum(cells: &[u8], w: usize, h: usize, x: usize, y: usize) -> u8 {
    let mut n = 0;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            let inside = nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h;
            if !inside || cells[ny as usize * w + nx as usize] == 0 {
                n += 1;
            }
        }
    }
    n
}

fn check_vacuum(cells: Vec<u8>, w: usize, h: usize) -> Result<(), String> {
    let mask = BinaryMask::from_cells(w as u32, h as u32, cells.clone()).map_err(|e| e.to_string())?;
    let field = vacuum_field(&mask);
    for y in 0..h {
        for x in 0..w {
            let want = (cells[y * w + x] == 1).then(|| naive_vacuum(&cells, w, h, x, y));
            let got = field.get(x as i64, y as i64);
            ensure!(got == want, "{w}x{h} mask {cells:?} at ({x},{y}): {got:?} vs {want:?}");
        }
    }
    Ok(())
}

fn vacuum_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for (w, h) in [(3usize, 3usize), (4, 4)] {
        for bits in 0u32..(1 << (w * h)) {
            check_vacuum((0..w * h).map(|i| (bits >> i & 1) as u8).collect(), w, h)?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..1000 {
        let density = rng.gen_range(0.05..0.95);
        check_vacuum((0..32 * 32).map(|_| rng.gen_bool(density) as u8).collect(), 32, 32)?;
        checked += 1;
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!("{checked} masks, {took:.2?}"))
}

// hull

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Directed edges (a, b) with every point on or left of the line and any
/// collinear point inside the closed segment.
fn brute_hull_edges(points: &BTreeSet<(i64, i64)>) -> BTreeSet<((i64, i64), (i64, i64))> {
    let mut edges = BTreeSet::new();
    for &a in points {
        for &b in points {
            if a == b {
                continue;
            }
            let supporting = points.iter().all(|&q| {
                let c = cross(a, b, q);
                c > 0
                    || (c == 0
                        && q.0 >= a.0.min(b.0)
                        && q.0 <= a.0.max(b.0)
                        && q.1 >= a.1.min(b.1)
                        && q.1 <= a.1.max(b.1))
            });
            if supporting {
                edges.insert((a, b));
            }
        }
    }
    edges
}

fn hull_case(raw: &[(i64, i64)]) -> Result<(), String> {
    let pts: Vec<PixelPoint> = raw.iter().map(|&(x, y)| PixelPoint::new(x, y)).collect();
    let hull = convex_hull(&pts).map_err(|e| e.to_string())?;
    let verts: Vec<(i64, i64)> = hull.vertices().iter().map(|p| (p.x, p.y)).collect();

    let set: BTreeSet<(i64, i64)> = raw.iter().copied().collect();
    let edges = brute_hull_edges(&set);
    let mut expected: BTreeSet<(i64, i64)> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    if expected.is_empty() {
        expected = set.clone();
    }
    let got: BTreeSet<(i64, i64)> = verts.iter().copied().collect();
    ensure!(got.len() == verts.len(), "repeated hull vertex in {verts:?}");
    ensure!(got == expected, "points {raw:?}: hull {verts:?}, oracle {expected:?}");

    if verts.len() >= 3 {
        for i in 0..verts.len() {
            let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
            ensure!(edges.contains(&(a, b)), "edge {a:?}->{b:?} is not counterclockwise on the hull");
        }
    }
    for &(x, y) in raw {
        let p = PixelPoint::new(x, y);
        let inside = if verts.len() >= 3 {
            hull.contains(p)
        } else {
            // degenerate hull: point or segment
            let (a, b) = (verts[0], *verts.last().unwrap());
            cross(a, b, (x, y)) == 0 && x >= a.0.min(b.0) && x <= a.0.max(b.0) && y >= a.1.min(b.1) && y <= a.1.max(b.1)
        };
        ensure!(inside, "point ({x},{y}) outside hull {verts:?}");
    }
    Ok(())
}

fn hull_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for case in 0..1000 {
        let n = rng.gen_range(1..=64);
        // small grids force duplicates and collinear runs
        let span = if case % 2 == 0 { 8 } else { 1000 };
        let raw: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(-span..=span), rng.gen_range(-span..=span))).collect();
        hull_case(&raw)?;
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!("1000 point sets, {took:.2?}"))
}

// tiling

fn tiling() -> Outcome {
    let start = Instant::now();
    let grid = tile(2400, 1600, 400).map_err(|e| e.to_string())?;
    ensure!(grid.len() == 24, "{} tiles", grid.len());
    let mut cover = vec![0u8; 2400 * 1600];
    for t in &grid.tiles {
        for y in t.origin_y..t.origin_y + t.height {
            for x in t.origin_x..t.origin_x + t.width {
                ensure!(x < 2400 && y < 1600, "tile {t:?} leaves the image");
                cover[y as usize * 2400 + x as usize] += 1;
            }
        }
    }
    ensure!(cover.iter().all(|&c| c == 1), "tiles overlap or leave gaps");
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("24 disjoint tiles covering 2400x1600, {took:.2?}"))
}

// end to end on disks

fn disks() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let cal = PhysicalCalibration::calibrate(2400, 1600, 90.0, 60.0, PhysicalPoint::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for r in [5u32, 10, 20, 40] {
        let mask = filled_disk(r, 3).map_err(|e| e.to_string())?;
        let result = process_mask(&mask, &cfg, &cal).map_err(|e| e.to_string())?;
        ensure!(result.defects.len() == 1, "r={r}: {} defects", result.defects.len());
        let d = &result.defects[0];
        let (h, s, b) = (d.hull.len(), d.salient.len(), d.boundary_points);
        ensure!(h <= s && s <= b, "r={r}: hull {h}, salient {s}, boundary {b}");
        ensure!(!d.fallback, "r={r}: fell back to boundary pixels");
        ensure!(d.fidelity.containment_ratio >= 0.95, "r={r}: containment {}", d.fidelity.containment_ratio);
        ensure!(d.path.len() <= 2000, "r={r}: {} waypoints", d.path.len());
        ensure!(d.validation.is_ok(), "r={r}: {:?}", d.validation.violations);
        notes.push(format!("r={r} {h}/{s}/{b} c={:.3}", d.fidelity.containment_ratio));
    }
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!("{}, {took:.2?}", notes.join("; ")))
}

// calibration

fn physical_mapping() -> Outcome {
    let cal = PhysicalCalibration::calibrate(2400, 1600, 90.0, 60.0, PhysicalPoint::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let corner = cal.to_physical(PixelPoint::new(2400, 1600), PixelAnchor::TopLeft);
    ensure!(
        (corner.x - 90.0).abs() <= 1e-9 && (corner.y - 60.0).abs() <= 1e-9,
        "corner maps to ({}, {})",
        corner.x,
        corner.y
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = PhysicalPoint::new(rng.gen_range(0.0..90.0), rng.gen_range(0.0..60.0));
        let (a, b) = cal.unproject(p);
        worst = worst.max(cal.project(a, b).distance(&p));
    }
    for y in (0..=1600).step_by(40) {
        for x in (0..=2400).step_by(40) {
            let p = cal.project(x as f64, y as f64);
            let (a, b) = cal.unproject(p);
            worst = worst.max(cal.project(a, b).distance(&p));
        }
    }
    ensure!(worst < 1e-9, "round-trip error {worst:e} mm");
    Ok(format!("corner ({}, {}) mm, worst round trip {worst:.1e} mm", corner.x, corner.y))
}

// determinism

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut masks: Vec<PathBuf> = std::fs::read_dir(&corpus)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    masks.sort();
    ensure!(masks.len() >= 3, "corpus has {} masks", masks.len());

    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = work.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_maskpath"))
            .arg("pipeline")
            .args(&masks)
            .args(["--jobs", "4", "--set", "leather_mm=90x60", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "run {run} failed: {}", String::from_utf8_lossy(&status.stderr));
        trees.push(tree(&out));
    }
    let (a, b) = (&trees[0], &trees[1]);
    ensure!(a.keys().eq(b.keys()), "file lists differ");
    if let Some(p) = a.keys().find(|k| a[*k] != b[*k]) {
        return Err(format!("{} differs", p.display()));
    }
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok(format!("{} masks, {} files, {bytes} bytes identical", masks.len(), a.len()))
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("metrics reproduction", metrics_reproduction),
        ("vacuum oracle equivalence", vacuum_oracle),
        ("hull correctness", hull_oracle),
        ("tiling", tiling),
        ("end-to-end disks", disks),
        ("physical mapping", physical_mapping),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
