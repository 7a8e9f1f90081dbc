//! Allocation-only core of the corpusforge pipeline.
//!
//! Two corpora are built from Wikipedia-style markup:
//!
//! * quantity spans taken from `{{convert}}` template calls
//!   ([`wikitext`], [`convert`], [`quantities`], [`dedup`]), and
//! * measurement annotations obtained by aligning knowledge-graph facts with
//!   sentences of the subject's article ([`facts`], [`align`]).
//!
//! Linguistic annotations come from [`lingo`]; [`export`] turns corpora into
//! IOB, QA and frequency tables. Nothing here performs IO.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod align;
pub mod convert;
pub mod dedup;
pub mod export;
pub mod facts;
pub mod lingo;
pub mod num;
pub mod quantities;
pub mod rng;
pub mod units;
pub mod wikitext;
