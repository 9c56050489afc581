//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use modelock::grid::Grid;

/// Textbook zero-padded correlation around the kernel centre.
pub fn naive_correlate(img: &Grid<f64>, taps: &Grid<f64>) -> Grid<f64> {
    let (h, w) = img.shape();
    let (kh, kw) = taps.shape();
    let (cy, cx) = ((kh / 2) as isize, (kw / 2) as isize);
    Grid::from_fn(h, w, |y, x| {
        let mut acc = 0.0;
        for r in 0..kh {
            for c in 0..kw {
                let iy = y as isize + r as isize - cy;
                let ix = x as isize + c as isize - cx;
                if let Some(v) = img.get_signed(iy, ix) {
                    acc += taps.get(r, c) * v;
                }
            }
        }
        acc
    })
}

/// 8-connected foreground components, by flood fill.
pub fn components(m: &Grid<bool>) -> usize {
    let mut seen = m.map(|_| false);
    let mut count = 0;
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if !m.get(r, c) || seen.get(r, c) {
                continue;
            }
            count += 1;
            seen.set(r, c, true);
            let mut stack = vec![(r as isize, c as isize)];
            while let Some((y, x)) = stack.pop() {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (yy, xx) = (y + dy, x + dx);
                        if m.get_signed(yy, xx) == Some(true) && !seen.get(yy as usize, xx as usize) {
                            seen.set(yy as usize, xx as usize, true);
                            stack.push((yy, xx));
                        }
                    }
                }
            }
        }
    }
    count
}

pub fn on_pixels(m: &Grid<bool>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if m.get(r, c) {
                out.push((r, c));
            }
        }
    }
    out
}

/// Size of a maximum one-to-one matching within `tol`, by trying every
/// assignment of predictions to ground truth.
pub fn exhaustive_matching(pred: &Grid<bool>, gt: &Grid<bool>, tol: f64) -> usize {
    fn best(i: usize, p: &[(usize, usize)], g: &[(usize, usize)], used: &mut [bool], tol2: f64) -> usize {
        if i == p.len() {
            return 0;
        }
        let mut top = best(i + 1, p, g, used, tol2);
        for j in 0..g.len() {
            let dr = p[i].0 as f64 - g[j].0 as f64;
            let dc = p[i].1 as f64 - g[j].1 as f64;
            if !used[j] && dr * dr + dc * dc <= tol2 {
                used[j] = true;
                top = top.max(1 + best(i + 1, p, g, used, tol2));
                used[j] = false;
            }
        }
        top
    }
    let p = on_pixels(pred);
    let g = on_pixels(gt);
    let mut used = vec![false; g.len()];
    best(0, &p, &g, &mut used, tol * tol)
}

/// Two-class IoU mean by counting each pixel category.
pub fn brute_miou(pred: &Grid<bool>, gt: &Grid<bool>) -> f64 {
    let (mut tt, mut tf, mut ft, mut ff) = (0usize, 0usize, 0usize, 0usize);
    for r in 0..pred.rows() {
        for c in 0..pred.cols() {
            match (pred.get(r, c), gt.get(r, c)) {
                (true, true) => tt += 1,
                (true, false) => tf += 1,
                (false, true) => ft += 1,
                (false, false) => ff += 1,
            }
        }
    }
    let iou = |inter: usize, uni: usize| if uni == 0 { 1.0 } else { inter as f64 / uni as f64 };
    (iou(tt, tt + tf + ft) + iou(ff, ff + tf + ft)) / 2.0
}

/// Mask from the low bits of `bits`, row-major.
pub fn mask_from_bits(rows: usize, cols: usize, bits: u64) -> Grid<bool> {
    Grid::from_fn(rows, cols, |r, c| bits >> (r * cols + c) & 1 == 1)
}
