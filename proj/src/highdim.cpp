namespace qdef {}
