use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Corpus, CorpusError, RawItem};

/// Two-pass dataset filter.
///
/// Pass one keeps reviews whose item carries at least one of `tags`
/// (case-insensitive); unreviewed items disappear with it. Pass two removes every
/// review of users left with fewer than `min_reviews_per_user` reviews. The
/// passes run once each, not to a fixpoint.
pub fn filter_corpus(
    corpus: &Corpus,
    items: &BTreeMap<String, RawItem>,
    tags: &BTreeSet<String>,
    min_reviews_per_user: usize,
) -> Result<Corpus, CorpusError> {
    if tags.is_empty() {
        return Err(CorpusError::EmptyTagSet);
    }
    if min_reviews_per_user == 0 {
        return Err(CorpusError::InvalidMinReviews);
    }
    let wanted: BTreeSet<String> = tags.iter().map(|t| t.trim().to_lowercase()).collect();
    let tagged = |item_id: &str| {
        items.get(item_id).is_some_and(|it| {
            it.category_tags
                .iter()
                .any(|t| wanted.contains(&t.trim().to_lowercase()))
        })
    };

    let kept: Vec<usize> = corpus
        .reviews()
        .iter()
        .enumerate()
        .filter(|(_, r)| tagged(&r.item_id))
        .map(|(p, _)| p)
        .collect();

    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for &p in &kept {
        *per_user
            .entry(corpus.reviews()[p].user_id.as_str())
            .or_default() += 1;
    }
    let kept: Vec<usize> = kept
        .into_iter()
        .filter(|&p| per_user[corpus.reviews()[p].user_id.as_str()] >= min_reviews_per_user)
        .collect();

    log::info!("filter kept {} of {} reviews", kept.len(), corpus.len());
    Ok(corpus.subset(&kept))
}
