use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::EmpiricalMeasure;

/// Writes one row per particle: `weight, x1, ..., xd`, with a header.
pub fn write_cloud_csv<T: Real, W: Write>(m: &EmpiricalMeasure<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["weight".to_string()];
    header.extend((1..=m.dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (pt, wt) in m.iter() {
        let mut row = Vec::with_capacity(pt.len() + 1);
        row.push(format!("{:e}", wt.f64()));
        row.extend(pt.iter().map(|v| format!("{:e}", v.f64())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format written by [`write_cloud_csv`]. A header row is optional.
pub fn read_cloud_csv<T: Real, R: Read>(input: R) -> Result<EmpiricalMeasure<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut dim = None;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if line == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Io(format!("line {}: need a weight and at least one coordinate", line + 1)));
        }
        let d = rec.len() - 1;
        if *dim.get_or_insert(d) != d {
            return Err(Error::Dimension {
                expected: dim.unwrap_or(d),
                got: d,
            });
        }
        let mut vals = rec.iter().map(|f| {
            f.parse::<f64>()
                .map_err(|e| Error::Io(format!("line {}: {e}", line + 1)))
        });
        weights.push(T::of(vals.next().unwrap()?));
        for v in vals {
            points.push(T::of(v?));
        }
    }
    let dim = dim.ok_or_else(|| Error::Domain("empty cloud file".into()))?;
    EmpiricalMeasure::new(dim, points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = EmpiricalMeasure::new(2, vec![0.1, -2.0, 3.5, 1e-3], vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        write_cloud_csv(&m, &mut buf).unwrap();
        let back: EmpiricalMeasure<f64> = read_cloud_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn headerless_input() {
        let back: EmpiricalMeasure<f64> = read_cloud_csv("0.5,1\n0.5,2\n".as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.point(1), &[2.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_cloud_csv::<f64, _>("0.5,1\n0.5,2,3\n".as_bytes()).is_err());
    }
}
