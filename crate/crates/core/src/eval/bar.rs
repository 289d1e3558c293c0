use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionCounts;
use crate::error::{Error, Result};
use crate::forgery::{FrameLabel, TruthMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Tn,
    Fn,
    Fp,
    Tp,
    OptOut,
}

impl Cell {
    fn glyph(self) -> char {
        match self {
            Cell::Tn => '.',
            Cell::Fn => 'n',
            Cell::Fp => 'p',
            Cell::Tp => '#',
            Cell::OptOut => 'x',
        }
    }

    fn color(self) -> &'static str {
        match self {
            Cell::Tn => "#ffffff",
            Cell::Fn => "#1f4fd1",
            Cell::Fp => "#d62020",
            Cell::Tp => "#21a336",
            Cell::OptOut => "#f2d21b",
        }
    }
}

/// Per-frame comparison of a localization against the truth. Only
/// duplicated frames count as positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionBar {
    pub truth: Vec<bool>,
    pub predicted: Vec<bool>,
    pub cells: Vec<Cell>,
    pub counts: ConfusionCounts,
}

/// Compares predicted inclusive frame intervals with the truth mask.
/// Frames flagged in `optout` are excluded from the counts.
pub fn confusion_bar(
    truth: &TruthMask,
    predicted: &[(usize, usize)],
    optout: Option<&[bool]>,
) -> Result<ConfusionBar> {
    let n = truth.len();
    if let Some(o) = optout {
        if o.len() != n {
            return Err(Error::LengthMismatch {
                declared: n,
                available: o.len(),
            });
        }
    }
    let mut pred = vec![false; n];
    for &(a, b) in predicted {
        if a > b || b >= n {
            return Err(Error::LengthMismatch {
                declared: n,
                available: b + 1,
            });
        }
        pred[a..=b].fill(true);
    }
    let positives: Vec<bool> = truth
        .labels
        .iter()
        .map(|l| *l == FrameLabel::Duplicated)
        .collect();
    let mut counts = ConfusionCounts::default();
    let cells = (0..n)
        .map(|t| {
            let cell = match (optout.is_some_and(|o| o[t]), positives[t], pred[t]) {
                (true, _, _) => Cell::OptOut,
                (_, true, true) => Cell::Tp,
                (_, true, false) => Cell::Fn,
                (_, false, true) => Cell::Fp,
                (_, false, false) => Cell::Tn,
            };
            match cell {
                Cell::Tp => counts.tp += 1,
                Cell::Fn => counts.fn_ += 1,
                Cell::Fp => counts.fp += 1,
                Cell::Tn => counts.tn += 1,
                Cell::OptOut => counts.optout += 1,
            }
            cell
        })
        .collect();
    Ok(ConfusionBar {
        truth: positives,
        predicted: pred,
        cells,
        counts,
    })
}

impl ConfusionBar {
    /// Three text rows: truth, system, confusion.
    pub fn to_text(&self) -> String {
        let row = |v: &[bool]| v.iter().map(|&b| if b { '#' } else { '.' }).collect::<String>();
        let confusion: String = self.cells.iter().map(|c| c.glyph()).collect();
        format!(
            "truth  {}\nsystem {}\nconf   {}\n",
            row(&self.truth),
            row(&self.predicted),
            confusion
        )
    }

    /// Three-row SVG bar; TN white, FN blue, FP red, TP green, OptOut yellow.
    pub fn to_svg(&self, cell_width: u32, row_height: u32) -> String {
        let n = self.cells.len() as u32;
        let (w, h) = (n * cell_width, 3 * row_height);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        let rows: [Vec<&str>; 3] = [
            self.truth.iter().map(|&b| if b { "#000000" } else { "#ffffff" }).collect(),
            self.predicted.iter().map(|&b| if b { "#000000" } else { "#ffffff" }).collect(),
            self.cells.iter().map(|c| c.color()).collect(),
        ];
        for (r, colors) in rows.iter().enumerate() {
            for (t, color) in colors.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{cell_width}\" height=\"{row_height}\" fill=\"{color}\"/>",
                    t as u32 * cell_width,
                    r as u32 * row_height
                );
            }
        }
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#000000\"/>"
        );
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(n: usize, dup: (usize, usize), sel: (usize, usize)) -> TruthMask {
        let mut t = TruthMask::pristine(n);
        t.labels[dup.0..=dup.1].fill(FrameLabel::Duplicated);
        t.labels[sel.0..=sel.1].fill(FrameLabel::SelectedOriginal);
        t.duplicated_range = Some(dup);
        t.selected_range = Some(sel);
        t
    }

    #[test]
    fn exact_prediction() {
        let t = truth(100, (60, 79), (10, 29));
        let b = confusion_bar(&t, &[(60, 79)], None).unwrap();
        assert_eq!((b.counts.tp, b.counts.fp, b.counts.fn_, b.counts.tn), (20, 0, 0, 80));
        assert_eq!(b.counts.total(), 100);
    }

    #[test]
    fn four_frames_missed_on_the_right() {
        let t = truth(100, (60, 79), (10, 29));
        let b = confusion_bar(&t, &[(60, 75)], None).unwrap();
        assert_eq!(b.counts.fn_, 4);
        assert_eq!(b.counts.tp, 16);
    }

    #[test]
    fn empty_prediction_and_optout() {
        let t = truth(50, (30, 39), (0, 9));
        let b = confusion_bar(&t, &[], None).unwrap();
        assert_eq!((b.counts.tp, b.counts.fn_), (0, 10));
        let mut o = vec![false; 50];
        o[..5].fill(true);
        let b = confusion_bar(&t, &[], Some(&o)).unwrap();
        assert_eq!(b.counts.optout, 5);
        assert_eq!(b.counts.total(), 50);
        assert!(confusion_bar(&t, &[], Some(&o[..10])).is_err());
        assert!(confusion_bar(&t, &[(40, 50)], None).is_err());
    }

    #[test]
    fn renderings() {
        let t = truth(10, (6, 7), (1, 2));
        let b = confusion_bar(&t, &[(7, 8)], None).unwrap();
        let text = b.to_text();
        assert!(text.contains("conf   ......n#p."));
        let svg = b.to_svg(4, 10);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("#21a336") && svg.contains("#d62020") && svg.contains("#1f4fd1"));
    }
}
