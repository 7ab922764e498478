//! Matrix Market I/O in the library's dialect: the standard banner plus a
//! `%%field:` header line carrying the entry domain. Coordinate entries
//! are written sorted row-major; array entries follow the Matrix Market
//! column-major convention. The header slot for extension fields is
//! reserved but reads reject them.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::intmul::IntegerMatrix;
use crate::sparse::SparseCoo;
use num_bigint::BigInt;
use std::io::{BufRead, Write};
use std::str::FromStr;

pub const BANNER_COORDINATE: &str = "%%MatrixMarket matrix coordinate integer general";
pub const BANNER_ARRAY: &str = "%%MatrixMarket matrix array integer general";

/// Entry domain declared in the `%%field:` header line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSpec {
    Modular(u64),
    Integer,
}

impl FieldSpec {
    pub fn header_line(&self) -> String {
        match self {
            FieldSpec::Modular(p) => format!("%%field: modular {p}"),
            FieldSpec::Integer => "%%field: integer".to_string(),
        }
    }
}

/// A parsed Matrix Market object.
#[derive(Debug, PartialEq, Eq)]
pub enum MmData {
    DenseField(DenseMatrix),
    SparseField(SparseCoo),
    DenseInt(IntegerMatrix),
}

impl MmData {
    pub fn field_spec(&self) -> FieldSpec {
        match self {
            MmData::DenseField(a) => FieldSpec::Modular(a.field().modulus()),
            MmData::SparseField(a) => FieldSpec::Modular(a.field().modulus()),
            MmData::DenseInt(_) => FieldSpec::Integer,
        }
    }
}

pub fn mm_write_dense(a: &DenseMatrix, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{BANNER_ARRAY}")?;
    writeln!(w, "{}", FieldSpec::Modular(a.field().modulus()).header_line())?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{}", a.get(i, j))?;
        }
    }
    Ok(())
}

pub fn mm_write_coo(a: &SparseCoo, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{BANNER_COORDINATE}")?;
    writeln!(w, "{}", FieldSpec::Modular(a.field().modulus()).header_line())?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for &(i, j, v) in a.entries() {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn mm_write_int(a: &IntegerMatrix, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{BANNER_ARRAY}")?;
    writeln!(w, "{}", FieldSpec::Integer.header_line())?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{}", a.get(i, j))?;
        }
    }
    Ok(())
}

pub fn mm_write(data: &MmData, w: &mut impl Write) -> Result<()> {
    match data {
        MmData::DenseField(a) => mm_write_dense(a, w),
        MmData::SparseField(a) => mm_write_coo(a, w),
        MmData::DenseInt(a) => mm_write_int(a, w),
    }
}

pub fn mm_to_string(data: &MmData) -> String {
    let mut buf = Vec::new();
    mm_write(data, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii output")
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

struct Lines<R> {
    inner: R,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_raw(&mut self) -> Result<Option<String>> {
        let mut buf = String::new();
        let n = self.inner.read_line(&mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some(buf.trim_end_matches(['\n', '\r']).to_string()))
    }

    /// Next line that is not a `%` comment; the field line is consumed
    /// separately before this is used.
    fn next_content(&mut self) -> Result<Option<(usize, String)>> {
        loop {
            match self.next_raw()? {
                None => return Ok(None),
                Some(l) if l.trim_start().starts_with('%') => continue,
                Some(l) if l.trim().is_empty() => continue,
                Some(l) => return Ok(Some((self.line_no, l))),
            }
        }
    }
}

fn parse_field_line(line: &str, line_no: usize) -> Result<FieldSpec> {
    let rest = line
        .strip_prefix("%%field:")
        .ok_or_else(|| perr(line_no, format!("expected '%%field:' header, got '{line}'")))?;
    let toks: Vec<&str> = rest.split_whitespace().collect();
    match toks.as_slice() {
        ["modular", p] => {
            let p: u64 = p
                .parse()
                .map_err(|_| perr(line_no, format!("bad modulus '{p}'")))?;
            Ok(FieldSpec::Modular(p))
        }
        ["integer"] => Ok(FieldSpec::Integer),
        _ => Err(perr(
            line_no,
            format!("unsupported field: '{}'", rest.trim()),
        )),
    }
}

fn parse_dim(tok: &str, line_no: usize, what: &str) -> Result<usize> {
    let v: i64 = tok
        .parse()
        .map_err(|_| perr(line_no, format!("bad {what} '{tok}'")))?;
    if v <= 0 {
        return Err(perr(line_no, format!("nonpositive {what} {v}")));
    }
    Ok(v as usize)
}

/// Parses the dialect, checking the optional expected field.
pub fn mm_read<R: BufRead>(reader: R, expected: Option<FieldSpec>) -> Result<MmData> {
    let mut lines = Lines {
        inner: reader,
        line_no: 0,
    };
    let banner = lines
        .next_raw()?
        .ok_or_else(|| perr(1, "empty input"))?;
    let coordinate = match banner.trim() {
        b if b == BANNER_COORDINATE => true,
        b if b == BANNER_ARRAY => false,
        b => return Err(perr(1, format!("bad header '{b}'"))),
    };
    let field_line = lines
        .next_raw()?
        .ok_or_else(|| perr(2, "missing '%%field:' line"))?;
    let spec = parse_field_line(&field_line, 2)?;
    if let Some(exp) = expected {
        if exp != spec {
            return Err(perr(2, format!("field {spec:?} does not match expected {exp:?}")));
        }
    }
    if let FieldSpec::Modular(p) = spec {
        // surfaces non-prime or oversized moduli with the line number
        PrimeField::new(p).map_err(|e| perr(2, e.to_string()))?;
    }

    let (size_no, size_line) = lines
        .next_content()?
        .ok_or_else(|| perr(lines.line_no + 1, "missing size line"))?;
    let toks: Vec<&str> = size_line.split_whitespace().collect();

    if coordinate {
        if toks.len() != 3 {
            return Err(perr(size_no, "coordinate size line must be '<m> <n> <nnz>'"));
        }
        let m = parse_dim(toks[0], size_no, "row count")?;
        let n = parse_dim(toks[1], size_no, "column count")?;
        let nnz: usize = toks[2]
            .parse()
            .map_err(|_| perr(size_no, format!("bad nnz '{}'", toks[2])))?;
        let mut triples = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (no, l) = lines
                .next_content()?
                .ok_or_else(|| perr(lines.line_no + 1, "unexpected end of entries"))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(perr(no, "coordinate entry must be '<i> <j> <v>'"));
            }
            let i = parse_dim(t[0], no, "row index")?;
            let j = parse_dim(t[1], no, "column index")?;
            if i > m {
                return Err(perr(no, format!("row {i} > {m}")));
            }
            if j > n {
                return Err(perr(no, format!("column {j} > {n}")));
            }
            let v = BigInt::from_str(t[2])
                .map_err(|_| perr(no, format!("entry '{}' is not an integer", t[2])))?;
            triples.push((i - 1, j - 1, v, no));
        }
        if let Some((no, _)) = lines.next_content()? {
            return Err(perr(no, "trailing data after declared entries"));
        }
        match spec {
            FieldSpec::Modular(p) => {
                let f = PrimeField::new(p).map_err(|e| perr(2, e.to_string()))?;
                let reduced: Vec<(usize, usize, u64)> = triples
                    .iter()
                    .map(|(i, j, v, _)| (*i, *j, f.normalize_big(v)))
                    .collect();
                Ok(MmData::SparseField(
                    SparseCoo::from_triplets(f, m, n, &reduced)
                        .map_err(|e| perr(size_no, e.to_string()))?,
                ))
            }
            FieldSpec::Integer => {
                // sparse integer containers are not supported in memory;
                // coordinate input over the integers scatters into a dense
                let mut out = IntegerMatrix::zeros(m, n);
                for (i, j, v, _) in triples {
                    out.set(i, j, out.get(i, j) + v);
                }
                Ok(MmData::DenseInt(out))
            }
        }
    } else {
        if toks.len() != 2 {
            return Err(perr(size_no, "array size line must be '<m> <n>'"));
        }
        let m = parse_dim(toks[0], size_no, "row count")?;
        let n = parse_dim(toks[1], size_no, "column count")?;
        let mut values = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            let (no, l) = lines
                .next_content()?
                .ok_or_else(|| perr(lines.line_no + 1, "unexpected end of array entries"))?;
            let v = BigInt::from_str(l.trim())
                .map_err(|_| perr(no, format!("entry '{}' is not an integer", l.trim())))?;
            values.push(v);
        }
        if let Some((no, _)) = lines.next_content()? {
            return Err(perr(no, "trailing data after declared entries"));
        }
        match spec {
            FieldSpec::Modular(p) => {
                let f = PrimeField::new(p).map_err(|e| perr(2, e.to_string()))?;
                let mut a = DenseMatrix::zeros(f, m, n);
                let mut it = values.iter();
                for j in 0..n {
                    for i in 0..m {
                        a.set(i, j, f.normalize_big(it.next().unwrap()));
                    }
                }
                Ok(MmData::DenseField(a))
            }
            FieldSpec::Integer => {
                let mut a = IntegerMatrix::zeros(m, n);
                let mut it = values.into_iter();
                for j in 0..n {
                    for i in 0..m {
                        a.set(i, j, it.next().unwrap());
                    }
                }
                Ok(MmData::DenseInt(a))
            }
        }
    }
}

pub fn mm_read_str(s: &str, expected: Option<FieldSpec>) -> Result<MmData> {
    mm_read(s.as_bytes(), expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::dense_to_csr;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn identity_byte_stream() {
        let eye = dense_to_csr(&DenseMatrix::identity(f(101), 2)).to_coo();
        let text = mm_to_string(&MmData::SparseField(eye));
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate integer general\n\
             %%field: modular 101\n\
             2 2 2\n\
             1 1 1\n\
             2 2 1\n"
        );
    }

    #[test]
    fn out_of_range_column() {
        let text = "%%MatrixMarket matrix coordinate integer general\n\
                    %%field: modular 7\n\
                    3 4 1\n\
                    3 5 7\n";
        match mm_read_str(text, None) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("column 5 > 4"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn sparse_round_trip_random() {
        let field = f(97);
        let mut s = 3u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            s >> 33
        };
        let triples: Vec<(usize, usize, u64)> = (0..200)
            .map(|_| (next() as usize % 50, next() as usize % 50, next() % 97))
            .collect();
        let a = SparseCoo::from_triplets(field, 50, 50, &triples).unwrap();
        let text = mm_to_string(&MmData::SparseField(a.clone()));
        match mm_read_str(&text, Some(FieldSpec::Modular(97))).unwrap() {
            MmData::SparseField(b) => assert_eq!(a, b),
            other => panic!("unexpected {other:?}"),
        }
        // byte stability on the canonical form
        let text2 = mm_to_string(&mm_read_str(&text, None).unwrap());
        assert_eq!(text, text2);
    }

    #[test]
    fn dense_round_trip() {
        let field = f(13);
        let a = DenseMatrix::from_rows(field, 2, 3, &[1, 2, 3, 4, 5, 6]).unwrap();
        let text = mm_to_string(&MmData::DenseField(a.clone()));
        // column-major array body
        assert_eq!(
            text,
            "%%MatrixMarket matrix array integer general\n\
             %%field: modular 13\n\
             2 3\n1\n4\n2\n5\n3\n6\n"
        );
        match mm_read_str(&text, None).unwrap() {
            MmData::DenseField(b) => assert_eq!(a, b),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integer_round_trip_signed() {
        let a = IntegerMatrix::from_entries(
            2,
            2,
            vec![
                BigInt::from(-5),
                BigInt::parse_bytes(b"123456789012345678901234567890", 10).unwrap(),
                BigInt::from(0),
                BigInt::from(7),
            ],
        )
        .unwrap();
        let text = mm_to_string(&MmData::DenseInt(a.clone()));
        match mm_read_str(&text, Some(FieldSpec::Integer)).unwrap() {
            MmData::DenseInt(b) => assert_eq!(a, b),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_corpus() {
        let cases = [
            ("%%MatrixMarket matrix weird integer general\nx", 1),
            (
                "%%MatrixMarket matrix coordinate integer general\n%%field: gf 2 3\n1 1 1\n1 1 1\n",
                2,
            ),
            (
                "%%MatrixMarket matrix coordinate integer general\n%%field: modular 6\n1 1 1\n1 1 1\n",
                2,
            ),
            (
                "%%MatrixMarket matrix coordinate integer general\n%%field: modular 7\n0 2 1\n1 1 1\n",
                3,
            ),
            (
                "%%MatrixMarket matrix coordinate integer general\n%%field: modular 7\n2 2\n",
                3,
            ),
            (
                "%%MatrixMarket matrix array integer general\n%%field: modular 7\n2 2\n1\n2\nbad\n4\n",
                6,
            ),
        ];
        for (text, want_line) in cases {
            match mm_read_str(text, None) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want_line, "for {text:?}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_entries_merge_by_field_addition() {
        let text = "%%MatrixMarket matrix coordinate integer general\n\
                    %%field: modular 7\n\
                    2 2 2\n\
                    1 1 3\n\
                    1 1 4\n";
        match mm_read_str(text, None).unwrap() {
            MmData::SparseField(a) => assert_eq!(a.nnz(), 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_ignored() {
        let text = "%%MatrixMarket matrix coordinate integer general\n\
                    %%field: modular 7\n\
                    % generator: test\n\
                    2 2 1\n\
                    % midstream comment\n\
                    2 1 3\n";
        match mm_read_str(text, None).unwrap() {
            MmData::SparseField(a) => {
                assert_eq!(a.entries(), &[(1, 0, 3)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
