use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};

pub const TRANSACTIONS_HEADER: [&str; 6] = ["tx_hash", "buyer", "token_id", "price", "currency", "timestamp"];

/// One purchase record.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub tx_hash: String,
    pub buyer: String,
    pub token_id: String,
    pub price: f64,
    pub currency: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransactionLog {
    pub transactions: Vec<Transaction>,
}

impl TransactionLog {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// `(buyer, token_id)` pairs in log order.
    pub fn purchases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.transactions
            .iter()
            .map(|t| (t.buyer.as_str(), t.token_id.as_str()))
    }
}

pub fn ingest_transactions(path: impl AsRef<Path>) -> Result<TransactionLog> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_transactions(file, path)
}

/// Parses the transactions CSV from any reader; `origin` is only used in
/// error messages.
pub fn read_transactions<R: std::io::Read>(reader: R, origin: &Path) -> Result<TransactionLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    match records.next() {
        Some(Ok(header)) => {
            if header.iter().ne(TRANSACTIONS_HEADER.iter().copied()) {
                return Err(Error::parse(
                    origin,
                    1,
                    format!(
                        "header must be exactly `{}`, found `{}`",
                        TRANSACTIONS_HEADER.join(","),
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                ));
            }
        }
        Some(Err(e)) => return Err(Error::parse(origin, 1, e.to_string())),
        None => return Err(Error::parse(origin, 1, "empty file, header missing")),
    }

    let mut seen = HashSet::new();
    let mut transactions = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(origin, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |msg: String| Error::parse(origin, line, msg);

        if rec.len() != TRANSACTIONS_HEADER.len() {
            return Err(err(format!(
                "expected {} columns, found {}",
                TRANSACTIONS_HEADER.len(),
                rec.len()
            )));
        }
        let field = |k: usize| -> Result<&str> {
            let v = rec[k].trim();
            if v.is_empty() {
                Err(err(format!("missing {}", TRANSACTIONS_HEADER[k])))
            } else {
                Ok(v)
            }
        };

        let tx_hash = field(0)?.to_string();
        let buyer = field(1)?.to_string();
        let token_id = field(2)?.to_string();
        let price_raw = field(3)?;
        let price: f64 = price_raw
            .parse()
            .map_err(|_| err(format!("unparseable price `{price_raw}`")))?;
        if !price.is_finite() || price < 0.0 {
            return Err(err(format!("price must be a finite non-negative decimal, got `{price_raw}`")));
        }
        let currency = field(4)?.to_string();
        if !currency.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
            return Err(err(format!("currency `{currency}` must be an uppercase symbol")));
        }
        let ts_raw = field(5)?;
        let timestamp = DateTime::parse_from_rfc3339(ts_raw)
            .map_err(|e| err(format!("unparseable timestamp `{ts_raw}`: {e}")))?
            .with_timezone(&Utc);

        if !seen.insert(tx_hash.clone()) {
            return Err(err(format!("duplicate tx_hash `{tx_hash}`")));
        }
        transactions.push(Transaction {
            tx_hash,
            buyer,
            token_id,
            price,
            currency,
            timestamp,
        });
    }
    Ok(TransactionLog { transactions })
}

/// Writes a log in the same CSV layout [`ingest_transactions`] reads.
pub fn write_transactions<W: std::io::Write>(log: &TransactionLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
    w.write_record(TRANSACTIONS_HEADER).map_err(to_err)?;
    for t in &log.transactions {
        w.write_record([
            t.tx_hash.as_str(),
            t.buyer.as_str(),
            t.token_id.as_str(),
            &t.price.to_string(),
            t.currency.as_str(),
            &t.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<transactions>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TransactionLog> {
        read_transactions(s.as_bytes(), Path::new("t.csv"))
    }

    const HEADER: &str = "tx_hash,buyer,token_id,price,currency,timestamp\n";

    #[test]
    fn reads_well_formed_rows() {
        let csv = format!(
            "{HEADER}0xa,0xu1,101,1.5,ETH,2021-09-14T08:00:00Z\n\
             0xb,0xu2,101,2,WETH,2021-09-15T08:00:00Z\n\
             0xc,0xu1,7,500,USDC,2022-01-01T00:00:00Z\n"
        );
        let log = parse(&csv).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.transactions[1].price, 2.0);
        assert_eq!(log.transactions[2].currency, "USDC");
    }

    #[test]
    fn missing_token_names_line() {
        let csv = format!("{HEADER}0xa,0xu1,101,1.5,ETH,2021-09-14T08:00:00Z\n0xb,0xu2,,1,ETH,2021-09-14T08:00:00Z\n");
        let msg = parse(&csv).unwrap_err().to_string();
        assert!(msg.contains(":3:") && msg.contains("token_id"), "{msg}");
    }

    #[test]
    fn rejects_short_rows_bad_values_and_duplicates() {
        let short = format!("{HEADER}0xa,0xu1,101,1.5,ETH\n");
        assert!(parse(&short).unwrap_err().to_string().contains("columns"));
        let price = format!("{HEADER}0xa,0xu1,101,-1,ETH,2021-09-14T08:00:00Z\n");
        assert!(parse(&price).unwrap_err().to_string().contains("price"));
        let price = format!("{HEADER}0xa,0xu1,101,abc,ETH,2021-09-14T08:00:00Z\n");
        assert!(parse(&price).unwrap_err().to_string().contains("price"));
        let ts = format!("{HEADER}0xa,0xu1,101,1,ETH,yesterday\n");
        assert!(parse(&ts).unwrap_err().to_string().contains("timestamp"));
        let dup = format!(
            "{HEADER}0xa,0xu1,101,1,ETH,2021-09-14T08:00:00Z\n0xa,0xu2,102,1,ETH,2021-09-14T08:00:00Z\n"
        );
        let msg = parse(&dup).unwrap_err().to_string();
        assert!(msg.contains("duplicate") && msg.contains(":3:"), "{msg}");
    }

    #[test]
    fn rejects_wrong_header() {
        let msg = parse("hash,buyer,token,price,currency,timestamp\n").unwrap_err().to_string();
        assert!(msg.contains(":1:"), "{msg}");
        assert!(parse("").is_err());
    }

    #[test]
    fn write_then_read_reproduces_log() {
        let csv = format!("{HEADER}0xa,0xu1,101,1.25,ETH,2021-09-14T08:00:00Z\n");
        let log = parse(&csv).unwrap();
        let mut buf = Vec::new();
        write_transactions(&log, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), csv);
    }
}
