use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One auction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionRecord {
    pub winning_bid: f64,
    pub reserve: Option<f64>,
    pub outside_value: Option<f64>,
    pub covariates: Vec<f64>,
    pub n_bidders: u32,
}

impl AuctionRecord {
    pub fn new(winning_bid: f64, covariates: Vec<f64>, n_bidders: u32) -> Self {
        Self {
            winning_bid,
            reserve: None,
            outside_value: None,
            covariates,
            n_bidders,
        }
    }

    pub fn with_reserve(mut self, reserve: f64) -> Self {
        self.reserve = Some(reserve);
        self
    }

    pub fn with_outside_value(mut self, w: f64) -> Self {
        self.outside_value = Some(w);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !self.winning_bid.is_finite() {
            return Err(Error::data("winning bid is not finite"));
        }
        if self.covariates.len() != dim {
            return Err(Error::data(format!(
                "expected {dim} covariates, found {}",
                self.covariates.len()
            )));
        }
        if self.covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("covariate is not finite"));
        }
        if self.n_bidders < 2 {
            return Err(Error::data(format!(
                "bidder count must be at least 2, got {}",
                self.n_bidders
            )));
        }
        for (name, v) in [("reserve", self.reserve), ("outside value", self.outside_value)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::data(format!("{name} is not finite")));
                }
            }
        }
        Ok(())
    }
}

/// A validated collection of auctions sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionDataset {
    records: Vec<AuctionRecord>,
    dim: usize,
}

impl AuctionDataset {
    pub fn new(records: Vec<AuctionRecord>) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.covariates.len());
        Self::with_dim(records, dim)
    }

    pub fn with_dim(records: Vec<AuctionRecord>, dim: usize) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.validate(dim).map_err(|e| e.at_record(i))?;
        }
        Ok(Self { records, dim })
    }

    pub fn records(&self) -> &[AuctionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<AuctionRecord> {
        self.records
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn winning_bids(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.winning_bid).collect()
    }

    /// The common bidder count, or `None` when counts differ or the set is empty.
    pub fn common_bidders(&self) -> Option<u32> {
        let first = self.records.first()?.n_bidders;
        self.records
            .iter()
            .all(|r| r.n_bidders == first)
            .then_some(first)
    }

    /// Split by bidder count. Indices into the original dataset are kept so
    /// per-record diagnostics can be mapped back.
    pub fn stratify(&self) -> BTreeMap<u32, (AuctionDataset, Vec<usize>)> {
        let mut groups: BTreeMap<u32, (Vec<AuctionRecord>, Vec<usize>)> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            let g = groups.entry(r.n_bidders).or_default();
            g.0.push(r.clone());
            g.1.push(i);
        }
        groups
            .into_iter()
            .map(|(n, (recs, idx))| {
                (
                    n,
                    (
                        AuctionDataset {
                            records: recs,
                            dim: self.dim,
                        },
                        idx,
                    ),
                )
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> AuctionDataset {
        AuctionDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            dim: self.dim,
        }
    }
}
