pub mod sutlang;
pub mod analysis;
pub mod behmodel;
pub mod seeding;
pub mod search;
pub mod harness;
