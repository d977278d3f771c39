//! Angular segment reports: slice-wise sector means around the cavity
//! centroid, the standard 17-segment assembly (basal 6, mid 6, apical 4,
//! apex), and a bullseye SVG rendering.

use crate::error::{Error, Result};
use crate::grid::{label_regions, BinaryMask, RegionClass};
use crate::streamline::{Assigned, ThicknessMap};

/// Direction segment indices advance around the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSense {
    CounterClockwise,
    Clockwise,
}

/// Angle of a pixel about the centroid, degrees in [0, 360), measured
/// y-up: 0 = right, 90 = up.
fn pixel_angle_deg(x: f64, y: f64, cx: f64, cy: f64) -> f64 {
    (-(y - cy)).atan2(x - cx).to_degrees().rem_euclid(360.0)
}

fn sector_of(angle_deg: f64, offset_deg: f64, width_deg: f64, sense: RotationSense) -> usize {
    let swept = match sense {
        RotationSense::CounterClockwise => (angle_deg - offset_deg).rem_euclid(360.0),
        RotationSense::Clockwise => (offset_deg - angle_deg).rem_euclid(360.0),
    };
    (swept / width_deg) as usize
}

/// Centroid the sectors pivot on: the enclosed cavity if there is one,
/// otherwise the wall itself.
fn centroid(map: &ThicknessMap) -> Result<(f64, f64)> {
    let g = map.geometry;
    let mut wall = BinaryMask::filled(g, false);
    let mut wall_sum = (0.0f64, 0.0f64);
    let mut wall_n = 0usize;
    for y in 0..g.height {
        for x in 0..g.width {
            if map.assigned(x, y) != Assigned::Zero {
                wall.set_wall(x, y, true);
                wall_sum.0 += x as f64;
                wall_sum.1 += y as f64;
                wall_n += 1;
            }
        }
    }
    if wall_n == 0 {
        return Err(Error::EmptyWall);
    }
    let regions = label_regions(&wall);
    let mut cavity_sum = (0.0f64, 0.0f64);
    let mut cavity_n = 0usize;
    for y in 0..g.height {
        for x in 0..g.width {
            if regions.class(x, y) == RegionClass::Cavity {
                cavity_sum.0 += x as f64;
                cavity_sum.1 += y as f64;
                cavity_n += 1;
            }
        }
    }
    if cavity_n > 0 {
        Ok((cavity_sum.0 / cavity_n as f64, cavity_sum.1 / cavity_n as f64))
    } else {
        Ok((wall_sum.0 / wall_n as f64, wall_sum.1 / wall_n as f64))
    }
}

/// Mean thickness per angular sector for one slice. Sector 0 opens at
/// `offset_deg` and they advance in `sense` order; a sector nothing falls
/// into reads 0.
pub fn segment_slice(
    map: &ThicknessMap,
    sectors: usize,
    offset_deg: f64,
    sense: RotationSense,
) -> Result<Vec<f64>> {
    if sectors == 0 || 360 % sectors != 0 {
        return Err(Error::Config(format!(
            "sector count {sectors} does not divide the circle evenly"
        )));
    }
    let width_deg = 360.0 / sectors as f64;
    let (cx, cy) = centroid(map)?;
    let g = map.geometry;
    let mut sums = vec![0.0f64; sectors];
    let mut counts = vec![0usize; sectors];
    for y in 0..g.height {
        for x in 0..g.width {
            if map.assigned(x, y) == Assigned::Zero {
                continue;
            }
            let angle = pixel_angle_deg(x as f64, y as f64, cx, cy);
            let s = sector_of(angle, offset_deg, width_deg, sense).min(sectors - 1);
            sums[s] += map.value(x, y);
            counts[s] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect())
}

/// Assemble the 17-segment vector from three short-axis slices and an apex
/// value: basal sectors 1-6, mid 7-12, apical 13-16, apex 17.
pub fn assemble_17(
    basal: &ThicknessMap,
    mid: &ThicknessMap,
    apical: &ThicknessMap,
    apex_mm: f64,
    offset_deg: f64,
    sense: RotationSense,
) -> Result<[f64; 17]> {
    let mut out = [0.0f64; 17];
    out[..6].copy_from_slice(&segment_slice(basal, 6, offset_deg, sense)?);
    out[6..12].copy_from_slice(&segment_slice(mid, 6, offset_deg, sense)?);
    out[12..16].copy_from_slice(&segment_slice(apical, 4, offset_deg, sense)?);
    out[16] = apex_mm;
    Ok(out)
}

/// Blue-to-red 256-step ramp clamped to [lo, hi].
fn ramp(value: f64, lo: f64, hi: f64) -> String {
    let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
    let step = (t * 255.0).round() as u8;
    format!("rgb({step},0,{})", 255 - step)
}

/// Ring radii on the 400x400 canvas, innermost first.
const RING_RADII: [f64; 5] = [0.0, 48.0, 96.0, 144.0, 192.0];
const CANVAS: f64 = 400.0;

fn polar(cx: f64, cy: f64, r: f64, angle_deg: f64) -> (f64, f64) {
    let a = angle_deg.to_radians();
    (cx + r * a.cos(), cy - r * a.sin())
}

fn sector_path(cx: f64, cy: f64, r_in: f64, r_out: f64, a0: f64, a1: f64) -> String {
    let (x0, y0) = polar(cx, cy, r_out, a0);
    let (x1, y1) = polar(cx, cy, r_out, a1);
    let (x2, y2) = polar(cx, cy, r_in, a1);
    let (x3, y3) = polar(cx, cy, r_in, a0);
    // Angles rise counterclockwise on screen (y points down), so the outer
    // arc runs with sweep flag 0 and the inner one back with 1.
    format!(
        "M {x0:.2} {y0:.2} A {r_out:.2} {r_out:.2} 0 0 0 {x1:.2} {y1:.2} \
         L {x2:.2} {y2:.2} A {r_in:.2} {r_in:.2} 0 0 1 {x3:.2} {y3:.2} Z"
    )
}

/// Angular span of ring sector `i`, width `w`, first sector opening at
/// `offset_deg`; returned with start < end for path drawing.
fn sector_span(i: usize, w: f64, offset_deg: f64, sense: RotationSense) -> (f64, f64) {
    match sense {
        RotationSense::CounterClockwise => {
            let start = offset_deg + i as f64 * w;
            (start, start + w)
        }
        RotationSense::Clockwise => {
            let end = offset_deg - i as f64 * w;
            (end - w, end)
        }
    }
}

/// Render the 17 segments as a bullseye SVG. Colors clamp into
/// `color_range`; the output string is byte-deterministic.
pub fn bullseye_svg(
    segments: &[f64; 17],
    color_range: (f64, f64),
    offset_deg: f64,
    sense: RotationSense,
) -> Result<String> {
    let (lo, hi) = color_range;
    if !(hi > lo) {
        return Err(Error::Range(format!(
            "color range needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let c = CANVAS / 2.0;
    let mut svg = String::with_capacity(8 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" \
         viewBox=\"0 0 {CANVAS} {CANVAS}\">\n"
    ));

    // Rings from the outside in: (first segment index, sector count, radii).
    let rings = [
        (0usize, 6usize, RING_RADII[3], RING_RADII[4]),
        (6, 6, RING_RADII[2], RING_RADII[3]),
        (12, 4, RING_RADII[1], RING_RADII[2]),
    ];
    let mut labels: Vec<(f64, f64, f64)> = Vec::with_capacity(17);
    for (first, sectors, r_in, r_out) in rings {
        let w = 360.0 / sectors as f64;
        for i in 0..sectors {
            let value = segments[first + i];
            let (a0, a1) = sector_span(i, w, offset_deg, sense);
            svg.push_str(&format!(
                "  <path d=\"{}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
                sector_path(c, c, r_in, r_out, a0, a1),
                ramp(value, lo, hi)
            ));
            let (lx, ly) = polar(c, c, (r_in + r_out) / 2.0, (a0 + a1) / 2.0);
            labels.push((lx, ly, value));
        }
    }
    // Apex disk.
    svg.push_str(&format!(
        "  <circle cx=\"{c:.2}\" cy=\"{c:.2}\" r=\"{:.2}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        RING_RADII[1],
        ramp(segments[16], lo, hi)
    ));
    labels.push((c, c, segments[16]));

    for (lx, ly, value) in labels {
        svg.push_str(&format!(
            "  <text x=\"{lx:.2}\" y=\"{ly:.2}\" text-anchor=\"middle\" dominant-baseline=\"middle\" \
             font-family=\"sans-serif\" font-size=\"13\" fill=\"#fff\" stroke=\"#000\" \
             stroke-width=\"0.6\" paint-order=\"stroke\">{value:.1}</text>\n"
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// CSV companion for the segment vector.
pub fn segments_to_csv(segments: &[f64; 17]) -> String {
    let mut text = String::from("segment,thickness_mm\n");
    for (i, v) in segments.iter().enumerate() {
        text.push_str(&format!("{},{v:.6}\n", i + 1));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;

    /// Ring of eight pixels around (2,2); the center pixel is the cavity.
    fn ring_map(values: &[((usize, usize), f64)]) -> ThicknessMap {
        let g = GridGeometry::new(5, 5, 1.0).unwrap();
        let mut vals = vec![0.0; g.len()];
        let mut assigned = vec![Assigned::Zero; g.len()];
        for &((x, y), v) in values {
            vals[g.index(x, y)] = v;
            assigned[g.index(x, y)] = Assigned::Splatted;
        }
        ThicknessMap::new(g, vals, assigned).unwrap()
    }

    fn eight_ring() -> Vec<((usize, usize), f64)> {
        vec![
            ((2, 1), 1.0), // up, 90 deg
            ((3, 1), 2.0), // up-right, 45
            ((3, 2), 3.0), // right, 0
            ((3, 3), 4.0), // down-right, -45
            ((2, 3), 5.0), // down, -90
            ((1, 3), 6.0), // down-left, -135
            ((1, 2), 7.0), // left, 180
            ((1, 1), 8.0), // up-left, 135
        ]
    }

    #[test]
    fn uniform_ring_reads_the_same_in_every_sector() {
        use crate::config::SolverConfig;
        use crate::grid::fixtures::annulus;
        use crate::streamline::measure;
        let mask = annulus(65, 32.0, 32.0, 20.0, 30.0, 1.0);
        let m = measure(&mask, &SolverConfig::default()).unwrap();
        let sectors = segment_slice(&m.thickness, 6, 0.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(sectors.len(), 6);
        for s in sectors {
            assert!((s - 10.0).abs() <= 0.1, "sector mean {s} strays from the ring width");
        }
    }

    /// Ring whose wall is 10 px wide on the left half and 20 px on the
    /// right; the cavity disk is symmetric, so its centroid sits exactly on
    /// the image midpoint.
    fn two_width_ring() -> ThicknessMap {
        use crate::config::SolverConfig;
        use crate::grid::BinaryMask;
        use crate::streamline::measure;
        let g = GridGeometry::new(97, 97, 1.0).unwrap();
        let mut mask = BinaryMask::filled(g, false);
        for y in 0..97 {
            for x in 0..97 {
                let d = ((x as f64 - 48.0).powi(2) + (y as f64 - 48.0).powi(2)).sqrt();
                let r_out = if x < 48 { 25.0 } else { 35.0 };
                if (15.0..r_out).contains(&d) {
                    mask.set_wall(x, y, true);
                }
            }
        }
        measure(&mask, &SolverConfig::default()).unwrap().thickness
    }

    #[test]
    fn half_and_half_ring_splits_into_thin_and_thick_sectors() {
        let map = two_width_ring();
        // Opening sector 0 at 90 degrees puts the width step on sector
        // boundaries: sectors 0-2 sweep the thin left half, 3-5 the thick
        // right half. Sectors that touch the step mix a little.
        let s = segment_slice(&map, 6, 90.0, RotationSense::CounterClockwise).unwrap();
        for (i, &v) in s.iter().enumerate() {
            let want = if i < 3 { 10.0 } else { 20.0 };
            assert!((v - want).abs() <= 1.0, "sector {i} mean {v} is not near {want}");
        }
        // The mid-half sectors never touch the step.
        assert!((s[1] - 10.0).abs() <= 0.25);
        assert!((s[4] - 20.0).abs() <= 0.25);
        assert!(s[..3].iter().cloned().fold(0.0, f64::max) < s[3..].iter().cloned().fold(f64::MAX, f64::min));
    }

    #[test]
    fn sector_means_match_a_per_pixel_binning_oracle() {
        let map = two_width_ring();
        let s = segment_slice(&map, 6, 90.0, RotationSense::CounterClockwise).unwrap();
        // Re-bin every measured pixel by hand about the known centroid.
        let mut sums = [0.0f64; 6];
        let mut counts = [0usize; 6];
        let g = map.geometry;
        for y in 0..g.height {
            for x in 0..g.width {
                if map.assigned(x, y) == Assigned::Zero {
                    continue;
                }
                let angle = (-(y as f64 - 48.0)).atan2(x as f64 - 48.0).to_degrees().rem_euclid(360.0);
                let sector = (((angle - 90.0).rem_euclid(360.0) / 60.0) as usize).min(5);
                sums[sector] += map.value(x, y);
                counts[sector] += 1;
            }
        }
        for i in 0..6 {
            let want = sums[i] / counts[i] as f64;
            assert!((s[i] - want).abs() < 1e-12, "sector {i}: {} vs oracle {want}", s[i]);
        }
    }

    #[test]
    fn sectors_group_pixels_by_swept_angle() {
        let map = ring_map(&eight_ring());
        // Quadrants opening at 45 deg, counterclockwise, half-open at the
        // far edge: [45,135) holds up-right + up, [135,225) up-left + left,
        // [225,315) down-left + down, [315,45) down-right + right.
        let means = segment_slice(&map, 4, 45.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(means, vec![(2.0 + 1.0) / 2.0, (8.0 + 7.0) / 2.0, (6.0 + 5.0) / 2.0, (4.0 + 3.0) / 2.0]);
    }

    #[test]
    fn clockwise_sense_mirrors_the_order() {
        let map = ring_map(&eight_ring());
        // Clockwise from 45 deg: sector 0 sweeps (45 down past 0], holding
        // up-right + right; the up pixel lands in the last sector.
        let means = segment_slice(&map, 4, 45.0, RotationSense::Clockwise).unwrap();
        assert_eq!(means, vec![(2.0 + 3.0) / 2.0, (4.0 + 5.0) / 2.0, (6.0 + 7.0) / 2.0, (8.0 + 1.0) / 2.0]);
    }

    #[test]
    fn sector_zero_opens_exactly_at_the_offset() {
        let map = ring_map(&[((3, 2), 3.0)]); // angle exactly 0
        let means = segment_slice(&map, 4, 0.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(means[0], 3.0);
        assert_eq!(&means[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn centroid_falls_back_to_the_wall_when_nothing_is_enclosed() {
        // A solid 2x2 block has no cavity; the pivot is the block center.
        let map = ring_map(&[((1, 1), 1.0), ((2, 1), 2.0), ((1, 2), 3.0), ((2, 2), 4.0)]);
        // Pivot (1.5, 1.5): the four pixels sit at 135/45/225/315 deg.
        let means = segment_slice(&map, 4, 0.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(means, vec![2.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn empty_maps_are_rejected_and_bad_sector_counts_too() {
        let g = GridGeometry::new(4, 4, 1.0).unwrap();
        let empty = ThicknessMap::new(g, vec![0.0; 16], vec![Assigned::Zero; 16]).unwrap();
        assert!(matches!(
            segment_slice(&empty, 4, 0.0, RotationSense::CounterClockwise),
            Err(Error::EmptyWall)
        ));
        let map = ring_map(&eight_ring());
        assert!(segment_slice(&map, 7, 0.0, RotationSense::CounterClockwise).is_err());
        assert!(segment_slice(&map, 0, 0.0, RotationSense::CounterClockwise).is_err());
    }

    #[test]
    fn quarter_turn_of_the_map_shifts_the_offset_by_ninety() {
        let map = ring_map(&eight_ring());
        let g = map.geometry;
        // Rotate the map the same way masks rotate: dest (y, w-1-x) <- (x, y).
        let mut vals = vec![0.0; g.len()];
        let mut assigned = vec![Assigned::Zero; g.len()];
        for y in 0..g.height {
            for x in 0..g.width {
                let (dx, dy) = (y, g.width - 1 - x);
                vals[g.index(dx, dy)] = map.value(x, y);
                assigned[g.index(dx, dy)] = map.assigned(x, y);
            }
        }
        let rotated = ThicknessMap::new(g, vals, assigned).unwrap();
        let base = segment_slice(&map, 4, 30.0, RotationSense::CounterClockwise).unwrap();
        let turned = segment_slice(&rotated, 4, 120.0, RotationSense::CounterClockwise).unwrap();
        for (a, b) in base.iter().zip(&turned) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn seventeen_segments_assemble_in_slice_order() {
        let basal = ring_map(&eight_ring().iter().map(|&(p, _)| (p, 2.0)).collect::<Vec<_>>());
        let mid = ring_map(&eight_ring().iter().map(|&(p, _)| (p, 3.0)).collect::<Vec<_>>());
        let apical = ring_map(&eight_ring().iter().map(|&(p, _)| (p, 4.0)).collect::<Vec<_>>());
        let segs = assemble_17(&basal, &mid, &apical, 5.0, 90.0, RotationSense::Clockwise).unwrap();
        assert!(segs[..6].iter().all(|&v| v == 2.0));
        assert!(segs[6..12].iter().all(|&v| v == 3.0));
        assert!(segs[12..16].iter().all(|&v| v == 4.0));
        assert_eq!(segs[16], 5.0);
    }

    #[test]
    fn bullseye_draws_all_parts_deterministically() {
        let mut segments = [0.0f64; 17];
        for (i, s) in segments.iter_mut().enumerate() {
            *s = i as f64;
        }
        let svg = bullseye_svg(&segments, (0.0, 16.0), 90.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(svg.matches("<path").count(), 16);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<text").count(), 17);
        // Range endpoints render as pure blue / pure red.
        assert!(svg.contains("rgb(0,0,255)"));
        assert!(svg.contains("rgb(255,0,0)"));
        let again = bullseye_svg(&segments, (0.0, 16.0), 90.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(svg, again);
        // Clamping: everything far above the range is pure red.
        let hot = [1000.0f64; 17];
        let svg = bullseye_svg(&hot, (0.0, 1.0), 90.0, RotationSense::CounterClockwise).unwrap();
        assert_eq!(svg.matches("rgb(255,0,0)").count(), 17);
        assert!(bullseye_svg(&hot, (1.0, 1.0), 90.0, RotationSense::CounterClockwise).is_err());
    }

    #[test]
    fn csv_lists_all_seventeen_rows() {
        let mut segments = [0.0f64; 17];
        segments[0] = 1.25;
        let csv = segments_to_csv(&segments);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 18);
        assert_eq!(lines[0], "segment,thickness_mm");
        assert_eq!(lines[1], "1,1.250000");
        assert_eq!(lines[17], "17,0.000000");
    }
}
