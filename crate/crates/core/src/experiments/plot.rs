//! Static SVG line plots and heatmaps.

use std::path::Path;

use plotters::prelude::*;

use crate::{Error, Result};

const SIZE: (u32, u32) = (720, 450);

#[derive(Clone, Debug, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw points as circles instead of a polyline.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, markers: false }
    }

    pub fn scatter(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, markers: true }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Plot `log10(y)`; non-positive values are dropped.
    pub log_y: bool,
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn write_line_plot(path: &Path, plot: &LinePlot) -> Result<()> {
    let series: Vec<(&Series, Vec<(f64, f64)>)> = plot
        .series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!plot.log_y || *y > 0.0))
                .map(|&(x, y)| (x, if plot.log_y { y.log10() } else { y }))
                .collect();
            (s, pts)
        })
        .collect();
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (x0, x1, y0, y1) = all.fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&plot.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    let y_label = if plot.log_y { format!("log10 {}", plot.y_label) } else { plot.y_label.clone() };
    chart.configure_mesh().x_desc(&plot.x_label).y_desc(y_label).draw().map_err(plot_err)?;

    for (i, (s, pts)) in series.into_iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        if s.markers {
            chart
                .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?
                .label(&s.label)
                .legend(move |(x, y)| Circle::new((x + 10, y), 3, color.filled()));
        } else {
            chart
                .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                .map_err(plot_err)?
                .label(&s.label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
    }
    if plot.series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Cell centres along x, ascending.
    pub x: Vec<f64>,
    /// Cell centres along y, ascending.
    pub y: Vec<f64>,
    /// `values[iy][ix]`, mapped linearly from `range` onto the colour scale.
    pub values: Vec<Vec<f64>>,
    pub range: (f64, f64),
}

/// Piecewise-linear approximation of the viridis colour map.
fn viridis(t: f64) -> RGBColor {
    const STOPS: [(u8, u8, u8); 5] = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    RGBColor(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_edges(centres: &[f64]) -> Vec<f64> {
    match centres.len() {
        0 => vec![0.0, 1.0],
        1 => vec![centres[0] - 0.5, centres[0] + 0.5],
        n => {
            let mut edges = vec![centres[0] - 0.5 * (centres[1] - centres[0])];
            edges.extend(centres.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            edges.push(centres[n - 1] + 0.5 * (centres[n - 1] - centres[n - 2]));
            edges
        }
    }
}

pub fn write_heatmap(path: &Path, map: &Heatmap) -> Result<()> {
    let xe = cell_edges(&map.x);
    let ye = cell_edges(&map.y);
    let (lo, hi) = map.range;
    let span = if hi > lo { hi - lo } else { 1.0 };

    let root = SVGBackend::new(path, (SIZE.0 + 80, SIZE.1)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (main, bar) = root.split_horizontally(SIZE.0);
    let mut chart = ChartBuilder::on(&main)
        .caption(&map.title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(xe[0]..xe[xe.len() - 1], ye[0]..ye[ye.len() - 1])
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(&map.x_label)
        .y_desc(&map.y_label)
        .draw()
        .map_err(plot_err)?;
    let cells = map.values.iter().enumerate().flat_map(|(iy, row)| {
        let (xe, ye) = (&xe, &ye);
        row.iter().enumerate().map(move |(ix, &v)| {
            Rectangle::new([(xe[ix], ye[iy]), (xe[ix + 1], ye[iy + 1])], viridis((v - lo) / span).filled())
        })
    });
    chart.draw_series(cells).map_err(plot_err)?;

    let mut scale = ChartBuilder::on(&bar)
        .margin_top(44)
        .margin_bottom(52)
        .margin_right(10)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..1.0, lo..lo + span)
        .map_err(plot_err)?;
    scale.configure_mesh().disable_mesh().disable_x_axis().draw().map_err(plot_err)?;
    scale
        .draw_series((0..100).map(|k| {
            let a = lo + span * k as f64 / 100.0;
            let b = lo + span * (k + 1) as f64 / 100.0;
            Rectangle::new([(0.0, a), (1.0, b)], viridis(k as f64 / 99.0).filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_parseable_svg() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.svg");
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series::line("a", vec![(0.0, 1.0), (1.0, 0.1)]),
                Series::scatter("b", vec![(0.5, 0.5), (0.7, -1.0)]),
            ],
            log_y: true,
        };
        write_line_plot(&path, &plot).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));

        let map = Heatmap {
            x: vec![0.1, 0.2, 0.3],
            y: vec![10.0, 20.0],
            values: vec![vec![0.0, 0.5, 1.0], vec![0.2, 0.4, 0.6]],
            range: (0.0, 1.0),
            ..Default::default()
        };
        let path = dir.path().join("h.svg");
        write_heatmap(&path, &map).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().contains("<rect"));
    }

    #[test]
    fn colour_map_endpoints() {
        assert_eq!(viridis(0.0), RGBColor(68, 1, 84));
        assert_eq!(viridis(1.0), RGBColor(253, 231, 37));
        assert_eq!(viridis(f64::NAN), viridis(0.0));
    }

    #[test]
    fn edges_bracket_centres() {
        assert_eq!(cell_edges(&[1.0, 2.0, 4.0]), vec![0.5, 1.5, 3.0, 5.0]);
    }
}
