// placeholder implementations, replaced by criteria.cpp as they land
namespace acceptance {

bool criterion_1() { return false; }
bool criterion_2() { return false; }
bool criterion_3() { return false; }
bool criterion_4() { return false; }
bool criterion_5() { return false; }
bool criterion_6() { return false; }
bool criterion_7() { return false; }
bool criterion_8() { return false; }
bool criterion_9() { return false; }
bool criterion_10() { return false; }
bool criterion_11() { return false; }
bool criterion_12() { return false; }

}  // namespace acceptance
