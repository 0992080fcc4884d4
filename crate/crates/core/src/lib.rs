//! Evaluation toolkit for movie audio descriptions (ADs).
//!
//! The crate aligns two independently narrated AD tracks of a movie,
//! measures how much they agree, builds multiple-choice questions from ADs
//! and plot descriptions, and scores candidate AD tracks by how well a
//! language model answers those questions with them as context.

pub mod align;
pub mod answering;
pub mod cli;
pub mod config;
pub mod evaluation;
pub mod ingest;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod qagen;
pub mod segmentation;
pub mod service;
pub mod similarity;
pub mod text;
