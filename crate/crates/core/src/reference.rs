//! Desired growth trajectory w^d(t): daily samples with linear interpolation
//! between them, stored on disk as `day,weight_g` CSV.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::sig6;

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    days: Vec<f64>,
    weights: Vec<f64>,
}

impl Reference {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("reference", "needs at least one sample"));
        }
        let mut days = Vec::with_capacity(points.len());
        let mut weights = Vec::with_capacity(points.len());
        for (day, weight) in points {
            if !(day.is_finite() && day >= 0.0) {
                return Err(Error::invalid("reference", format!("bad day {day}")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::invalid(
                    "reference",
                    format!("bad weight {weight} on day {day}"),
                ));
            }
            if days.last().is_some_and(|&last| day <= last) {
                return Err(Error::invalid(
                    "reference",
                    "days must be strictly increasing",
                ));
            }
            days.push(day);
            weights.push(weight);
        }
        Ok(Self { days, weights })
    }

    /// Samples on days 0, 1, 2, ...
    pub fn from_daily(weights: Vec<f64>) -> Result<Self> {
        Self::new(
            weights
                .into_iter()
                .enumerate()
                .map(|(d, w)| (d as f64, w))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.days.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn last_day(&self) -> f64 {
        *self.days.last().expect("non-empty")
    }

    /// Linearly interpolated weight, held constant outside the sampled range.
    pub fn at(&self, day: f64) -> f64 {
        let i = self.days.partition_point(|&d| d <= day);
        if i == 0 {
            return self.weights[0];
        }
        if i == self.days.len() {
            return self.weights[i - 1];
        }
        let (d0, d1) = (self.days[i - 1], self.days[i]);
        let (w0, w1) = (self.weights[i - 1], self.weights[i]);
        w0 + (w1 - w0) * (day - d0) / (d1 - d0)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let day_col = headers.iter().position(|h| h == "day");
        let weight_col = headers.iter().position(|h| h == "weight_g");
        let (Some(day_col), Some(weight_col)) = (day_col, weight_col) else {
            return Err(Error::Config(
                "reference CSV must have `day` and `weight_g` columns".into(),
            ));
        };
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let parse = |col: usize| -> Result<f64> {
                record
                    .get(col)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Config(format!("unparseable reference row {record:?}")))
            };
            points.push((parse(day_col)?, parse(weight_col)?));
        }
        Self::new(points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "day,weight_g")?;
        for (day, weight) in self.points() {
            writeln!(out, "{},{}", sig6(day), sig6(weight))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_samples() {
        let r = Reference::new(vec![(0.0, 10.0), (10.0, 30.0)]).unwrap();
        assert_eq!(r.at(0.0), 10.0);
        assert_eq!(r.at(5.0), 20.0);
        assert_eq!(r.at(10.0), 30.0);
        assert_eq!(r.at(25.0), 30.0);
    }

    #[test]
    fn rejects_unsorted_and_nonpositive() {
        assert!(Reference::new(vec![(1.0, 5.0), (0.0, 6.0)]).is_err());
        assert!(Reference::new(vec![(0.0, 0.0)]).is_err());
        assert!(Reference::new(vec![]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let r = Reference::from_daily(vec![6.0, 6.5, 7.25]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "day,weight_g\n0,6\n1,6.5\n2,7.25\n"
        );
        assert_eq!(Reference::read_csv(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn csv_requires_header() {
        assert!(Reference::read_csv("d,w\n0,1\n".as_bytes()).is_err());
    }
}
