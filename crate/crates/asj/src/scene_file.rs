//! Plain-text scene descriptions, one directive per line:
//!
//! ```text
//! # comment
//! canvas 400 300
//! seed 7                      # noise realization, optional
//! noise 0.02
//! stroke 2
//! rect 100 80 60 40 15          # cx cy width height angle°
//! cross 250 150 30 30 20 25 0   # cx cy four arm lengths, angle°
//! l 60 200 50 0 40 90           # corner, then (length, angle°) twice
//! segment 10 290 390 290
//! polyline closed 300 20 380 20 340 80
//! ```

use asj_core::eval::scene::{SceneSpec, Shape};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn numbers(line: usize, args: &[&str], want: Option<usize>) -> Result<Vec<f64>, ParseError> {
    let err = |message: String| ParseError { line, message };
    let v: Vec<f64> = args
        .iter()
        .map(|a| a.parse::<f64>().map_err(|_| err(format!("not a number: {a}"))))
        .collect::<Result<_, _>>()?;
    if let Some(n) = want {
        if v.len() != n {
            return Err(err(format!("expected {n} numbers, got {}", v.len())));
        }
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(err(format!("not finite: {bad}")));
    }
    Ok(v)
}

/// A parsed scene and its optional `seed` directive.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFile {
    pub spec: SceneSpec,
    pub seed: Option<u64>,
}

pub fn parse_scene(text: &str) -> Result<SceneFile, ParseError> {
    let mut spec: Option<SceneSpec> = None;
    let mut seed = None;
    let mut pending: Vec<(usize, &str, Vec<f64>)> = Vec::new();
    let mut polylines: Vec<Shape> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words: Vec<&str> = content.split_whitespace().collect();
        let key = words.remove(0);
        match key {
            "canvas" => {
                let v = numbers(line, &words, Some(2))?;
                if v.iter().any(|x| *x < 1.0 || x.fract() != 0.0) {
                    return Err(ParseError { line, message: "canvas needs positive integer sizes".into() });
                }
                spec = Some(SceneSpec::new(v[0] as usize, v[1] as usize));
            }
            "seed" => {
                let v = match words.as_slice() {
                    [w] => w.parse::<u64>().ok(),
                    _ => None,
                };
                seed = Some(v.ok_or(ParseError { line, message: "seed needs one unsigned integer".into() })?);
            }
            "polyline" => {
                let closed = words.first() == Some(&"closed");
                let v = numbers(line, &words[closed as usize..], None)?;
                if v.len() < 4 || v.len() % 2 != 0 {
                    return Err(ParseError { line, message: "polyline needs at least two x y pairs".into() });
                }
                polylines.push(Shape::Polyline { points: v.chunks(2).map(|c| (c[0], c[1])).collect(), closed });
            }
            "noise" | "stroke" | "rect" | "cross" | "l" | "segment" => {
                let want = match key {
                    "noise" | "stroke" => 1,
                    "rect" | "l" => 5 + (key == "l") as usize,
                    "cross" => 7,
                    _ => 4,
                };
                pending.push((line, key, numbers(line, &words, Some(want))?));
            }
            other => return Err(ParseError { line, message: format!("unknown directive {other}") }),
        }
    }
    let mut spec = spec.ok_or(ParseError { line: 0, message: "missing canvas directive".into() })?;
    for (line, key, v) in pending {
        match key {
            "noise" if v[0] >= 0.0 => spec.noise_sigma = v[0],
            "stroke" if v[0] > 0.0 => spec.stroke_width = v[0],
            "noise" | "stroke" => return Err(ParseError { line, message: format!("{key} out of range: {}", v[0]) }),
            "rect" => spec.shapes.push(Shape::Rectangle {
                center: (v[0], v[1]),
                width: v[2],
                height: v[3],
                angle: v[4].to_radians(),
            }),
            "cross" => spec.shapes.push(Shape::Cross {
                center: (v[0], v[1]),
                arms: [v[2], v[3], v[4], v[5]],
                angle: v[6].to_radians(),
            }),
            "l" => spec.shapes.push(Shape::L {
                corner: (v[0], v[1]),
                first: (v[2], v[3].to_radians()),
                second: (v[4], v[5].to_radians()),
            }),
            _ => spec.shapes.push(Shape::Segment { a: (v[0], v[1]), b: (v[2], v[3]) }),
        }
    }
    spec.shapes.extend(polylines);
    Ok(SceneFile { spec, seed })
}
