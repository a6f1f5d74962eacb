#include <limits.h>

int add(int a, int b) { return a + b; }

int sub(int a, int b)
{
    return a - b;
}

int clamp(int v, int lo, int hi) {
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
}

/* greatest common divisor */
int gcd(int a, int b) {
    while (b != 0) { int t = b; b = a % b; a = t; }
    return a;
}

double mean(const double *xs, int n) {
    double s = 0.0;
    for (int i = 0; i < n; i++) s += xs[i];
    return n ? s / n : 0.0;
}

float lerp(float a, float b, float t){return a + (b - a) * t;}

double  hypot2 ( double x,
                 double y )
{
    return x * x + y * y;
}
