//! Brute-force oracles. Each one is written against raw data and shares no
//! code path with the implementation it checks.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use maskpath_core::{BinaryMask, PixelPoint};
use rand::Rng;

pub fn cell(mask: &BinaryMask, x: i64, y: i64) -> u8 {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    if x < 0 || y < 0 || x >= w || y >= h {
        0
    } else {
        mask.cells()[(y * w + x) as usize]
    }
}

/// Count of background neighbours in the 3×3 window, per pixel; `None` on background.
pub fn naive_vacuum(mask: &BinaryMask) -> Vec<Option<u8>> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if cell(mask, x, y) == 0 {
                out.push(None);
                continue;
            }
            let mut n = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy) != (0, 0) && cell(mask, x + dx, y + dy) == 0 {
                        n += 1;
                    }
                }
            }
            out.push(Some(n));
        }
    }
    out
}

/// Components as a set of pixel sets, by recursive-style stack flood fill.
pub fn flood_fill(mask: &BinaryMask, eight: bool) -> BTreeSet<BTreeSet<(i64, i64)>> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut seen = HashSet::new();
    let mut comps = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            if cell(mask, x, y) == 0 || seen.contains(&(x, y)) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![(x, y)];
            seen.insert((x, y));
            while let Some((cx, cy)) = stack.pop() {
                comp.insert((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if (dx, dy) == (0, 0) || (!eight && dx != 0 && dy != 0) {
                            continue;
                        }
                        let (nx, ny) = (cx + dx, cy + dy);
                        if cell(mask, nx, ny) == 1 && seen.insert((nx, ny)) {
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            comps.insert(comp);
        }
    }
    comps
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Extreme points: endpoints of every pair (p, q) that is a supporting line
/// with all points on its left or on the closed segment pq.
pub fn brute_hull_vertices(points: &[(i64, i64)]) -> BTreeSet<(i64, i64)> {
    let uniq: Vec<(i64, i64)> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if uniq.len() <= 2 {
        return uniq.into_iter().collect();
    }
    let mut out = BTreeSet::new();
    for &p in &uniq {
        for &q in &uniq {
            if p == q {
                continue;
            }
            let supporting = uniq.iter().all(|&r| {
                let c = cross(p, q, r);
                c > 0
                    || (c == 0
                        && r.0 >= p.0.min(q.0)
                        && r.0 <= p.0.max(q.0)
                        && r.1 >= p.1.min(q.1)
                        && r.1 <= p.1.max(q.1))
            });
            if supporting {
                out.insert(p);
                out.insert(q);
            }
        }
    }
    if out.is_empty() {
        // every point collinear: the two extremes
        let min = *uniq.iter().min().unwrap();
        let max = *uniq.iter().max().unwrap();
        out.insert(min);
        out.insert(max);
    }
    out
}

/// Inside-or-on a convex polygon via area decomposition: the fan of
/// triangles from `p` covers exactly the polygon's area iff `p` is inside.
pub fn in_convex_by_area(verts: &[PixelPoint], p: PixelPoint) -> bool {
    let n = verts.len();
    let area2 = |a: PixelPoint, b: PixelPoint, c: PixelPoint| ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
    let poly: i64 = (1..n - 1).map(|i| area2(verts[0], verts[i], verts[i + 1])).sum();
    let fan: i64 = (0..n).map(|i| area2(p, verts[i], verts[(i + 1) % n])).sum();
    fan == poly
}

pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32, density: f64) -> BinaryMask {
    let cells = (0..w * h).map(|_| rng.gen_bool(density) as u8).collect();
    BinaryMask::from_cells(w, h, cells).unwrap()
}

pub fn mask_from_bits(w: u32, h: u32, bits: u32) -> BinaryMask {
    let cells = (0..w * h).map(|i| ((bits >> i) & 1) as u8).collect();
    BinaryMask::from_cells(w, h, cells).unwrap()
}

/// Largest number of disjoint (pred, truth) pairs among `edges`, by enumeration.
pub fn max_matching(n_pred: usize, n_truth: usize, edges: &[(usize, usize)]) -> usize {
    fn go(i: usize, n_pred: usize, used: &mut Vec<bool>, edges: &[(usize, usize)]) -> usize {
        if i == n_pred {
            return 0;
        }
        let mut best = go(i + 1, n_pred, used, edges);
        for &(p, t) in edges {
            if p == i && !used[t] {
                used[t] = true;
                best = best.max(1 + go(i + 1, n_pred, used, edges));
                used[t] = false;
            }
        }
        best
    }
    go(0, n_pred, &mut vec![false; n_truth], edges)
}
