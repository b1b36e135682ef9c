//! Diagnostic overlays: the image with every branch drawn at its estimated
//! length, and a side-by-side view of matched L-junctions.

use std::fmt::Write;

use asj_core::image::GrayImage;
use asj_core::matching::{LJunction, MatchPair};
use asj_core::scale::ASJunction;
use base64::Engine;

const PALETTE: [&str; 6] = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4"];

fn embedded(img: &GrayImage, x: f64) -> anyhow::Result<String> {
    let data = base64::engine::general_purpose::STANDARD.encode(crate::io::png_bytes(img)?);
    Ok(format!(
        "<image x=\"{x}\" y=\"0\" width=\"{}\" height=\"{}\" href=\"data:image/png;base64,{data}\"/>\n",
        img.width(),
        img.height()
    ))
}

fn ray(out: &mut String, x0: f64, y0: f64, theta: f64, len: f64, color: &str) {
    let (x1, y1) = (x0 + len * theta.cos(), y0 + len * theta.sin());
    let _ = writeln!(
        out,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>"
    );
}

fn dot(out: &mut String, x: f64, y: f64, color: &str) {
    let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"{color}\"/>");
}

pub fn detection_overlay(img: &GrayImage, junctions: &[ASJunction]) -> anyhow::Result<String> {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = img.width(),
        h = img.height()
    );
    s += &embedded(img, 0.0)?;
    for (i, j) in junctions.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for b in &j.branches {
            ray(&mut s, j.center.0, j.center.1, b.orientation, b.scale, color);
        }
        dot(&mut s, j.center.0, j.center.1, color);
    }
    s += "</svg>\n";
    Ok(s)
}

/// Both images side by side; each match draws its two L-junctions and a line
/// between their centers.
pub fn match_overlay(
    img_p: &GrayImage,
    img_q: &GrayImage,
    lp: &[LJunction],
    lq: &[LJunction],
    pairs: &[MatchPair],
) -> anyhow::Result<String> {
    let off = img_p.width() as f64;
    let (w, h) = (img_p.width() + img_q.width(), img_p.height().max(img_q.height()));
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    s += &embedded(img_p, 0.0)?;
    s += &embedded(img_q, off)?;
    for (i, m) in pairs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let (a, b) = (&lp[m.index_p], &lq[m.index_q]);
        for (l, dx) in [(a, 0.0), (b, off)] {
            for br in [&l.branch1, &l.branch2] {
                ray(&mut s, l.center.0 + dx, l.center.1, br.orientation, br.scale, color);
            }
        }
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"0.5\" stroke-dasharray=\"3,2\"/>",
            a.center.0,
            a.center.1,
            b.center.0 + off,
            b.center.1
        );
    }
    s += "</svg>\n";
    Ok(s)
}
