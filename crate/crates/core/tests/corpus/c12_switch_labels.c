extern int __VERIFIER_nondet_int(void);
int main(void) {
    int r = 0;
    switch (__VERIFIER_nondet_int()) {
    case 1:
        while (r < 3) r++;
        break;
    case 2: {
        if (r) r = 5;
        break;
    }
    default:
        r = -1;
    }
err:
    for (;;) { goto err; }
}
