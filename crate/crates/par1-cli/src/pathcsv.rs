//! Path CSV files: columns k, x, u. Row k = 0 carries X₀ and an empty
//! innovation field. Floats are written in shortest round-trip form, so a
//! write/read cycle is bit-exact.

use std::io::{Read, Write};

pub struct PathData {
    /// X_0…X_{nP}.
    pub x: Vec<f64>,
    /// u_1…u_{nP} when every row past k = 0 carried one.
    pub u: Option<Vec<f64>>,
}

pub fn write_path<W: Write>(mut out: W, x: &[f64], u: &[f64]) -> Result<(), std::io::Error> {
    writeln!(out, "k,x,u")?;
    writeln!(out, "0,{},", x[0])?;
    for (i, value) in x.iter().enumerate().skip(1) {
        writeln!(out, "{i},{value},{}", u[i - 1])?;
    }
    Ok(())
}

pub fn read_path<R: Read>(input: R) -> Result<PathData, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    {
        let headers = reader.headers().map_err(|e| e.to_string())?;
        if headers.len() < 2 || &headers[0] != "k" || &headers[1] != "x" {
            return Err(format!(
                "expected header `k,x,u`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ));
        }
    }
    let mut x = Vec::new();
    let mut u = Vec::new();
    let mut u_complete = true;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let k: usize = record
            .get(0)
            .ok_or_else(|| format!("row {row}: missing k"))?
            .parse()
            .map_err(|e| format!("row {row}: bad k: {e}"))?;
        if k != row {
            return Err(format!("row {row}: expected k = {row}, found {k}"));
        }
        let value: f64 = record
            .get(1)
            .ok_or_else(|| format!("row {row}: missing x"))?
            .parse()
            .map_err(|e| format!("row {row}: bad x: {e}"))?;
        x.push(value);
        if k > 0 {
            match record.get(2).filter(|s| !s.is_empty()) {
                Some(text) => u.push(
                    text.parse::<f64>()
                        .map_err(|e| format!("row {row}: bad u: {e}"))?,
                ),
                None => u_complete = false,
            }
        }
    }
    if x.is_empty() {
        return Err("empty path file".into());
    }
    Ok(PathData {
        x,
        u: if u_complete && !u.is_empty() {
            Some(u)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let x = vec![1.0, 0.1 + 0.2, -3.5e-200, 7.123456789012345e100];
        let u = vec![0.30000000000000004, f64::MIN_POSITIVE, -0.0];
        let mut buf = Vec::new();
        write_path(&mut buf, &x, &u).unwrap();
        let data = read_path(&buf[..]).unwrap();
        assert_eq!(data.x, x);
        let got = data.u.unwrap();
        assert_eq!(got.len(), u.len());
        for (a, b) in got.iter().zip(&u) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_path(&b"a,b\n1,2\n"[..]).is_err());
        assert!(read_path(&b"k,x,u\n0,1.0,\n2,3.0,0.5\n"[..]).is_err());
        assert!(read_path(&b"k,x,u\n0,abc,\n"[..]).is_err());
    }
}
