int classify(int v) {
    if (v < 0) {
        return -1;
    } else if (v == 0) {
        return 0;
    } else if (v < 10) {
        return 1;
    } else {
        return 2;
    }
}
